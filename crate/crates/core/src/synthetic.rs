//! Seeded synthetic review corpus with five overlapping class-conditional
//! word distributions.
//!
//! Each review mixes neutral restaurant nouns with sentiment words. A
//! sentiment word is drawn from a polarity level near the review's star
//! value, and is sometimes emitted as `not <word>` from the opposite level,
//! so that bigrams carry information unigrams cannot.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Business, Review, Star};

const LEVELS: [&[&str]; 5] = [
    &["awful", "horrible", "disgusting", "terrible", "inedible", "rude", "filthy", "worst"],
    &["bland", "mediocre", "disappointing", "overpriced", "slow", "soggy", "stale", "greasy"],
    &["okay", "decent", "average", "fine", "acceptable", "standard", "passable", "ordinary"],
    &["good", "tasty", "friendly", "nice", "solid", "fresh", "pleasant", "recommend"],
    &["amazing", "outstanding", "superb", "perfect", "excellent", "incredible", "fantastic", "best"],
];

const NEUTRAL: &[&str] = &[
    "menu",
    "table",
    "waiter",
    "waitress",
    "server",
    "kitchen",
    "dinner",
    "lunch",
    "breakfast",
    "brunch",
    "pizza",
    "burger",
    "fries",
    "salad",
    "soup",
    "pasta",
    "sushi",
    "taco",
    "burrito",
    "sandwich",
    "steak",
    "chicken",
    "pork",
    "beef",
    "fish",
    "shrimp",
    "rice",
    "noodles",
    "bread",
    "dessert",
    "cake",
    "coffee",
    "tea",
    "beer",
    "wine",
    "cocktail",
    "drink",
    "patio",
    "parking",
    "location",
    "downtown",
    "street",
    "friday",
    "saturday",
    "weekend",
    "night",
    "evening",
    "morning",
    "family",
    "friends",
    "wife",
    "husband",
    "kids",
    "birthday",
    "order",
    "plate",
    "portion",
    "price",
    "bill",
    "check",
    "reservation",
    "wait",
    "line",
    "counter",
    "booth",
    "bar",
    "music",
    "decor",
    "owner",
    "chef",
    "staff",
    "manager",
    "sauce",
    "cheese",
    "spicy",
    "sweet",
    "salty",
    "crispy",
    "hot",
    "cold",
    "place",
    "restaurant",
    "food",
    "meal",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_reviews: usize,
    pub seed: u64,
    /// Sharpness of the level distribution around the true star; larger
    /// means less class overlap.
    pub sharpness: f64,
    /// Share of tokens that are sentiment-bearing.
    pub sentiment_share: f64,
    /// Probability a sentiment token is emitted as a negated opposite.
    pub negation_rate: f64,
    /// How many of the built-in neutral nouns are used.
    pub neutral_words: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_reviews: 2000,
            seed: 0,
            sharpness: 1.3,
            sentiment_share: 0.4,
            negation_rate: 0.3,
            neutral_words: NEUTRAL.len(),
            min_len: 10,
            max_len: 30,
        }
    }
}

/// Reviews with uniformly distributed stars, spread over ten businesses.
pub fn generate(spec: &SyntheticSpec) -> Vec<Review> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let level_dists: Vec<WeightedIndex<f64>> = (0..5)
        .map(|c: i32| {
            let w: Vec<f64> = (0..5).map(|l: i32| (-spec.sharpness * (l - c).abs() as f64).exp()).collect();
            WeightedIndex::new(w).expect("positive weights")
        })
        .collect();

    let neutral = &NEUTRAL[..spec.neutral_words.clamp(1, NEUTRAL.len())];
    (0..spec.n_reviews)
        .map(|i| {
            let class = rng.random_range(0..5usize);
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let mut words: Vec<&str> = Vec::with_capacity(len + 8);
            while words.len() < len {
                if rng.random_bool(spec.sentiment_share) {
                    let level = level_dists[class].sample(&mut rng);
                    if rng.random_bool(spec.negation_rate) {
                        let opposite = LEVELS[4 - level];
                        words.push("not");
                        words.push(opposite[rng.random_range(0..opposite.len())]);
                    } else {
                        words.push(LEVELS[level][rng.random_range(0..LEVELS[level].len())]);
                    }
                } else {
                    words.push(neutral[rng.random_range(0..neutral.len())]);
                }
            }
            let mut text = words.join(" ");
            if let Some(first) = text.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            text.push('.');
            Review {
                review_id: format!("r{i:06}"),
                business_id: format!("b{:02}", i % 10),
                stars: Star::new(class as u8 + 1).expect("1..=5"),
                text,
            }
        })
        .collect()
}

/// Businesses referenced by [`generate`], all tagged as restaurants, plus
/// one shop whose reviews a restaurant filter drops.
pub fn businesses() -> Vec<Business> {
    let mut out: Vec<Business> = (0..10)
        .map(|i| Business {
            business_id: format!("b{i:02}"),
            categories: vec!["Restaurants".into(), if i % 2 == 0 { "Pizza" } else { "Diners" }.into()],
            name: format!("Synthetic Kitchen {i}"),
        })
        .collect();
    out.push(Business {
        business_id: "shop".into(),
        categories: vec!["Shopping".into()],
        name: "Synthetic Shop".into(),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        let spec = SyntheticSpec { n_reviews: 50, ..Default::default() };
        assert_eq!(generate(&spec), generate(&spec));
        assert_ne!(generate(&spec), generate(&SyntheticSpec { seed: 1, ..spec }));
    }

    #[test]
    fn lengths_and_labels() {
        let spec = SyntheticSpec { n_reviews: 200, ..Default::default() };
        let reviews = generate(&spec);
        let mut seen = [false; 5];
        for r in &reviews {
            let n = r.text.split(' ').count();
            assert!(n >= spec.min_len && n <= spec.max_len + 1, "{n}");
            seen[r.stars.value() as usize - 1] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
