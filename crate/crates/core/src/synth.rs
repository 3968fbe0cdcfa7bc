//! Deterministic synthetic review corpora for tests and demos.
//!
//! `generate_reviews_tsv` emits a tab-separated file in the same shape as
//! the real drug-review export: quoted free-text reviews with HTML
//! entities, a skewed rating distribution, per-condition drug pools, and a
//! sprinkle of rows the cleaning stage is expected to drop (missing
//! conditions, scraping junk, duplicated ids). Identical (rows, seed)
//! inputs produce byte-identical output.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::JUNK_CONDITION_MARKER;
use crate::Result;

const CONDITIONS: &[(&str, &[&str])] = &[
    (
        "Birth Control",
        &["Etonogestrel", "Levonorgestrel", "Nexplanon", "Ortho Tri-Cyclen", "Skyla"],
    ),
    ("Depression", &["Sertraline", "Bupropion", "Venlafaxine", "Escitalopram"]),
    ("Pain", &["Tramadol", "Oxycodone", "Acetaminophen", "Ibuprofen", "Naproxen"]),
    ("Anxiety", &["Alprazolam", "Buspirone", "Lorazepam", "Clonazepam"]),
    ("Acne", &["Accutane", "Doxycycline", "Tretinoin", "Spironolactone"]),
    ("Insomnia", &["Zolpidem", "Trazodone", "Melatonin", "Eszopiclone"]),
    (
        "High Blood Pressure",
        &["Lisinopril", "Losartan", "Amlodipine", "Metoprolol"],
    ),
    ("ADHD", &["Adderall", "Methylphenidate", "Vyvanse", "Concerta"]),
    ("Diabetes, Type 2", &["Metformin", "Glipizide", "Victoza", "Januvia"]),
    ("Migraine", &["Sumatriptan", "Topiramate", "Rizatriptan", "Excedrin"]),
];

/// Cumulative permille weights aligned with `CONDITIONS`.
const CONDITION_WEIGHTS: [u32; 10] = [300, 420, 520, 610, 690, 760, 830, 890, 950, 1000];

const POSITIVE_SENTENCES: &[&str] = &[
    "This medicine really helped my {condition} and I feel like myself again",
    "Amazing results within two weeks and the side effects were very mild",
    "I was skeptical at first but {drug} worked wonders for me",
    "My doctor recommended it and honestly it has been life changing",
    "The pain relief was quick and it keeps working all day",
    "After years of trying different options this one finally worked",
    "It&#039;s been three months and my symptoms are almost completely gone",
    "Great experience overall and I would recommend it to anyone struggling",
    "I sleep better, my mood improved, and the dosage was easy to manage",
    "Very effective for me even though the first week felt a little strange",
];

const NEGATIVE_SENTENCES: &[&str] = &[
    "This medication made me dizzy and nauseous almost every morning",
    "It did absolutely nothing for my {condition} even after two months",
    "The side effects were unbearable so I stopped taking {drug}",
    "I gained weight, felt exhausted, and my symptoms got worse",
    "Horrible experience with constant headaches and stomach cramps",
    "My anxiety spiked and I couldn&#039;t sleep at all while on it",
    "Would not recommend it because the withdrawal was terrible",
    "It stopped working after the first month and the doctor doubled the dose",
    "I broke out in a rash and had to quit after only five days",
    "Very disappointed since it was expensive and completely ineffective",
];

const NEUTRAL_SENTENCES: &[&str] = &[
    "I have been taking it once a day with food as instructed",
    "My pharmacy switched me to the generic version last spring",
    "The dose started at 25mg and moved up slowly over a month",
    "I take it together with a vitamin supplement every evening",
    "This is my second medication for this condition so far",
];

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

/// Draw a rating from a distribution skewed toward the top of the scale,
/// roughly two thirds positive (6 or higher).
fn draw_rating(rng: &mut ChaCha8Rng) -> u8 {
    let roll = rng.gen_range(0..100u32);
    match roll {
        0..=31 => 10,
        32..=45 => 9,
        46..=57 => 8,
        58..=63 => 7,
        64..=68 => 6,
        69..=74 => 5,
        75..=78 => 4,
        79..=84 => 3,
        85..=89 => 2,
        _ => 1,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn build_review(rng: &mut ChaCha8Rng, condition: &str, drug: &str, rating: u8) -> String {
    let primary: &[&str] = if rating >= 6 {
        POSITIVE_SENTENCES
    } else {
        NEGATIVE_SENTENCES
    };
    let n_sentences = rng.gen_range(1..=3);
    let mut parts: Vec<String> = Vec::with_capacity(n_sentences);
    for s in 0..n_sentences {
        let pool = if s > 0 && rng.gen_range(0..4) == 0 {
            NEUTRAL_SENTENCES
        } else {
            primary
        };
        let sentence = pick(rng, pool)
            .replace("{condition}", condition)
            .replace("{drug}", drug);
        parts.push(sentence);
    }
    let separator = if rng.gen_range(0..10) == 0 { ".<br />" } else { ". " };
    let mut text = parts.join(separator);
    text.push('.');
    if rng.gen_range(0..8) == 0 {
        text = format!("&quot;{text}&quot;");
    }
    if rng.gen_range(0..40) == 0 {
        text.push_str("\nUpdate: still the same one year later.");
    }
    text
}

/// Generate a parseable review table with `rows` data rows.
///
/// About 0.5% of rows each get a missing condition, a scraping-junk
/// condition, or a uniqueID duplicating an earlier row, so corpus cleaning
/// has deterministic work to do. All rows parse without row errors.
pub fn generate_reviews_tsv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut writer = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_writer(Vec::new());
    writer
        .write_record(["uniqueID", "drugName", "condition", "review", "rating", "date", "usefulCount"])
        .expect("writing to memory cannot fail");

    let mut ids: Vec<u64> = Vec::with_capacity(rows);
    for i in 0..rows {
        let roll = rng.gen_range(0..1000u32);
        let condition_index = CONDITION_WEIGHTS.iter().position(|&w| roll < w).unwrap();
        let (condition, drugs) = CONDITIONS[condition_index];
        let drug = if rng.gen_range(0..10) < 6 {
            drugs[rng.gen_range(0..2.min(drugs.len()))]
        } else {
            drugs[rng.gen_range(0..drugs.len())]
        };
        let rating = draw_rating(&mut rng);
        let review = build_review(&mut rng, condition, drug, rating);

        let unique_id = if !ids.is_empty() && rng.gen_range(0..200) == 0 {
            ids[rng.gen_range(0..ids.len())]
        } else {
            10_000 + i as u64 * 7 + u64::from(rng.gen_range(0..5u32))
        };
        ids.push(unique_id);

        let condition_field = match rng.gen_range(0..200) {
            0 => String::new(),
            1 => format!(
                "{}{JUNK_CONDITION_MARKER} users found this comment helpful.",
                rng.gen_range(3..100)
            ),
            _ => condition.to_string(),
        };

        let year = rng.gen_range(2008..=2017);
        let month = rng.gen_range(1..=12usize);
        let day = rng.gen_range(1..=28u32);
        let date = format!("{} {}, {}", MONTHS[month - 1], day, year);

        let boost = if rating >= 6 { rng.gen_range(0..30) } else { 0 };
        let useful: u32 = {
            let r: f64 = rng.gen();
            (r * r * 120.0) as u32 + boost
        };

        writer
            .write_record([
                unique_id.to_string(),
                drug.to_string(),
                condition_field,
                review,
                rating.to_string(),
                date,
                useful.to_string(),
            ])
            .expect("writing to memory cannot fail");
    }
    let bytes = writer.into_inner().expect("flushing to memory cannot fail");
    String::from_utf8(bytes).expect("generator emits UTF-8")
}

/// Generate and write a fixture corpus in one step.
pub fn write_reviews_tsv(path: &Path, rows: usize, seed: u64) -> Result<()> {
    std::fs::write(path, generate_reviews_tsv(rows, seed))?;
    Ok(())
}
