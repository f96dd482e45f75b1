//! Seeded synthetic corpora for demos, benchmarks and end-to-end tests.
//!
//! Samples come from two template families, tagged in the `family` extra
//! field: arithmetic word problems (`math`) and short advice exchanges
//! (`chat`). A small share of chat samples has an empty instruction.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::corpus::{Corpus, Sample};

const TOPICS: &[&str] = &[
    "cooking rice", "learning guitar", "running", "saving money", "gardening",
    "writing emails", "public speaking", "sleeping well", "reading more", "painting",
    "studying history", "fixing a bike", "baking bread", "hiking", "chess openings",
];

const ADVICE: &[&str] = &[
    "start small and build a routine",
    "set a clear goal for each week",
    "ask someone experienced for feedback",
    "write down what worked and what did not",
    "rest properly between sessions",
    "focus on one habit at a time",
    "measure your progress every few days",
    "keep your tools clean and ready",
];

const OPENERS: &[&str] = &["Give me a tip about", "How do I get better at", "Any advice on", "What should a beginner know about"];

const NOUNS: &[&str] = &[
    "river", "market", "teacher", "window", "garden", "engine", "letter", "mountain",
    "village", "kitchen", "student", "forest", "station", "library", "painter", "harbor",
];

const VERBS: &[&str] = &[
    "watched", "carried", "opened", "painted", "visited", "followed", "described", "cleaned",
    "found", "remembered", "crossed", "built",
];

const ADJECTIVES: &[&str] = &[
    "old", "quiet", "bright", "small", "busy", "distant", "green", "narrow", "warm", "famous",
];

fn math_sample(rng: &mut ChaCha8Rng) -> (String, String) {
    let a: u32 = rng.random_range(2..200);
    let b: u32 = rng.random_range(2..200);
    match rng.random_range(0..3) {
        0 => (
            format!("Compute {a} + {b}."),
            format!("We add {a} and {b}. {a} + {b} = {}. The answer is {}.", a + b, a + b),
        ),
        1 => (
            format!("What is {a} times {b}?"),
            format!("Multiply {a} by {b}. {a} * {b} = {}. The answer is {}.", a * b, a * b),
        ),
        _ => {
            let x = a.max(b);
            let y = a.min(b);
            (
                format!("Solve for x: x + {y} = {x}."),
                format!("Subtract {y} from both sides. x = {x} - {y} = {}. The answer is {}.", x - y, x - y),
            )
        }
    }
}

fn chat_sample(rng: &mut ChaCha8Rng) -> (String, String) {
    let topic = TOPICS.choose(rng).unwrap();
    let opener = OPENERS.choose(rng).unwrap();
    let first = ADVICE.choose(rng).unwrap();
    let second = ADVICE.choose(rng).unwrap();
    let instruction = if rng.random_bool(0.03) {
        String::new()
    } else {
        format!("{opener} {topic}?")
    };
    (
        instruction,
        format!("When it comes to {topic}, {first}. Also, {second}. Keep practicing and you will improve."),
    )
}

/// `n` samples, roughly half math and half chat, ids `s00000`, `s00001`, ...
pub fn corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let math = rng.random_bool(0.5);
            let (instruction, response) = if math {
                math_sample(&mut rng)
            } else {
                chat_sample(&mut rng)
            };
            let mut s = Sample::new(format!("s{i:05}"), instruction, response);
            s.extra.insert(
                "family".into(),
                Value::from(if math { "math" } else { "chat" }),
            );
            s
        })
        .collect();
    Corpus::from_samples(samples).expect("generated ids are unique and responses non-empty")
}

/// `n` lines of generic narrative prose, used to train a base model.
pub fn base_texts(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba5e);
    (0..n)
        .map(|_| {
            let sentences = rng.random_range(2..5);
            (0..sentences)
                .map(|_| {
                    format!(
                        "The {} {} {} the {} near the {} {}.",
                        ADJECTIVES.choose(&mut rng).unwrap(),
                        NOUNS.choose(&mut rng).unwrap(),
                        VERBS.choose(&mut rng).unwrap(),
                        NOUNS.choose(&mut rng).unwrap(),
                        ADJECTIVES.choose(&mut rng).unwrap(),
                        NOUNS.choose(&mut rng).unwrap(),
                    )
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
