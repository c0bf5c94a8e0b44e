//! Synthetic app-usage benchmark dataset in the style of a mobile
//! context-aware CTR log: ten categorical features plus a binary click
//! label at a ~0.33 positive rate.
//!
//! The label depends on latent per-user and per-item affinities plus
//! context effects, so CTR models have real signal to learn, and the city
//! column is functionally tied to the country column so constraint
//! filtering has something to enforce. Used by the examples and tests;
//! handy whenever no real dataset is at hand.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{infer_schema_named, Row, TabularDataset};
use crate::error::Result;
use crate::nn::params::seeded_rng;
use crate::nn::sigmoid;

/// Shape of the generated log.
#[derive(Debug, Clone)]
pub struct DemoSpec {
    pub rows: usize,
    pub users: usize,
    pub items: usize,
    pub countries: usize,
    pub cities_per_country: usize,
    /// Target positive-label rate; the intercept is solved to match it.
    pub target_ctr: f64,
}

impl Default for DemoSpec {
    fn default() -> Self {
        Self {
            rows: 20_000,
            users: 300,
            items: 150,
            countries: 40,
            cities_per_country: 3,
            target_ctr: 0.33,
        }
    }
}

const DAYTIMES: [&str; 7] = ["morning", "noon", "afternoon", "evening", "night", "sunrise", "sunset"];
const WEEKDAYS: [&str; 7] =
    ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
const WEATHER: [&str; 9] =
    ["sunny", "cloudy", "rainy", "snowy", "foggy", "stormy", "windy", "drizzle", "sleet"];
const HOMEWORK: [&str; 3] = ["unknown", "home", "work"];
const COST: [&str; 2] = ["free", "paid"];

/// Generate a dataset. Deterministic given (spec, seed).
pub fn generate(spec: &DemoSpec, seed: u64) -> Result<TabularDataset> {
    let mut rng = seeded_rng(seed);
    let normal = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * sd
    };

    // Latent effects driving the click probability.
    let user_affinity: Vec<f64> = (0..spec.users).map(|_| normal(&mut rng, 1.8)).collect();
    let item_quality: Vec<f64> = (0..spec.items).map(|_| normal(&mut rng, 1.8)).collect();
    let daytime_w: Vec<f64> = (0..7).map(|_| normal(&mut rng, 0.8)).collect();
    let weekday_w: Vec<f64> = (0..7).map(|_| normal(&mut rng, 0.5)).collect();
    let weather_w: Vec<f64> = (0..9).map(|_| normal(&mut rng, 0.5)).collect();
    let homework_w: Vec<f64> = (0..3).map(|_| normal(&mut rng, 0.3)).collect();
    let cost_w: Vec<f64> = (0..2).map(|_| normal(&mut rng, 0.3)).collect();

    struct Draw {
        user: usize,
        item: usize,
        daytime: usize,
        weekday: usize,
        homework: usize,
        cost: usize,
        weather: usize,
        country: usize,
        city: usize,
        score: f64,
    }

    let mut draws = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let user = rng.random_range(0..spec.users);
        let item = rng.random_range(0..spec.items);
        let daytime = rng.random_range(0..7);
        let weekday = rng.random_range(0..7);
        let homework = rng.random_range(0..3);
        let cost = rng.random_range(0..2);
        let weather = rng.random_range(0..9);
        let country = rng.random_range(0..spec.countries);
        let city = country * spec.cities_per_country + rng.random_range(0..spec.cities_per_country);
        let score = user_affinity[user]
            + item_quality[item]
            + daytime_w[daytime]
            + weekday_w[weekday]
            + weather_w[weather]
            + homework_w[homework]
            + cost_w[cost];
        draws.push(Draw { user, item, daytime, weekday, homework, cost, weather, country, city, score });
    }

    // Solve the intercept so the mean click probability hits target_ctr.
    let mean_rate = |b: f64| -> f64 {
        draws.iter().map(|d| sigmoid(d.score + b)).sum::<f64>() / draws.len() as f64
    };
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < spec.target_ctr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bias = 0.5 * (lo + hi);

    let raw_rows: Vec<(Vec<String>, String)> = draws
        .iter()
        .map(|d| {
            let p = sigmoid(d.score + bias);
            let label = if rng.random_range(0.0..1.0) < p { "1" } else { "0" };
            let values = vec![
                format!("u{}", d.user),
                format!("app{}", d.item),
                DAYTIMES[d.daytime].to_string(),
                WEEKDAYS[d.weekday].to_string(),
                if d.weekday >= 5 { "weekend" } else { "workday" }.to_string(),
                HOMEWORK[d.homework].to_string(),
                COST[d.cost].to_string(),
                WEATHER[d.weather].to_string(),
                format!("country{}", d.country),
                format!("city{}", d.city),
            ];
            (values, label.to_string())
        })
        .collect();

    let names: Vec<String> = [
        "user", "item", "daytime", "weekday", "isweekend", "homework", "cost", "weather",
        "country", "city",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let schema = Arc::new(infer_schema_named(&names, "click", &raw_rows)?);
    let rows: Vec<Row> = raw_rows
        .iter()
        .map(|(values, label)| {
            let raw: Vec<&str> = values.iter().map(String::as_str).collect();
            schema.encode_row(&raw, if label == "1" { 1 } else { 0 })
        })
        .collect::<Result<Vec<_>>>()?;
    TabularDataset::new(schema, rows)
}

/// Generate and write straight to a CSV file.
pub fn write_csv(spec: &DemoSpec, seed: u64, path: &std::path::Path) -> Result<TabularDataset> {
    let ds = generate(spec, seed)?;
    ds.write_csv(path, None)?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_features_and_target_rate() {
        let spec = DemoSpec { rows: 8000, ..DemoSpec::default() };
        let ds = generate(&spec, 1).unwrap();
        assert_eq!(ds.schema.num_features(), 10);
        assert_eq!(ds.len(), 8000);
        let (pos, neg) = ds.class_counts();
        let rate = pos as f64 / (pos + neg) as f64;
        assert!((rate - 0.33).abs() < 0.02, "positive rate {rate}");
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = DemoSpec { rows: 500, ..DemoSpec::default() };
        let a = generate(&spec, 9).unwrap();
        let b = generate(&spec, 9).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn city_is_tied_to_country() {
        let spec = DemoSpec { rows: 3000, ..DemoSpec::default() };
        let ds = generate(&spec, 4).unwrap();
        let country_idx = ds.schema.feature_index("country").unwrap();
        let city_idx = ds.schema.feature_index("city").unwrap();
        // Each observed city name maps to exactly one country name.
        let mut seen = std::collections::HashMap::new();
        for row in &ds.rows {
            let country = ds.schema.decode_value(country_idx, row.values[country_idx]);
            let city = ds.schema.decode_value(city_idx, row.values[city_idx]);
            let prev = seen.insert(city.to_string(), country.to_string());
            if let Some(prev) = prev {
                assert_eq!(prev, country, "city {city} seen under two countries");
            }
        }
    }
}
