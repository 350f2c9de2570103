//! Generator of clean, regular columns (IDs, dates, codes) for recall
//! benchmarks. Each table holds one column drawn from a fixed template list.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::table::{Column, Table};

const UPPER: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const HEX: &[u8] = b"0123456789ABCDEF";
const COUNTRIES: [&str; 8] = ["US", "UK", "IND", "FRA", "CAN", "GER", "AUS", "BRA"];

pub const TEMPLATES: [&str; 12] = [
    "prefixed_id",
    "iso_date",
    "slash_date",
    "product_code",
    "phone",
    "time",
    "email",
    "player_id",
    "version",
    "amount",
    "room",
    "hex_color",
];

fn pick(rng: &mut ChaCha8Rng, set: &[u8]) -> char {
    *set.choose(rng).expect("non-empty") as char
}

fn digits(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

/// Per-column template parameters, fixed for every row of the column.
struct Params {
    prefix: String,
    width: usize,
    domain: String,
}

fn value(template: usize, p: &Params, rng: &mut ChaCha8Rng) -> String {
    match template {
        0 => format!("{}-{}", p.prefix, digits(rng, p.width)),
        1 => format!(
            "{}-{:02}-{:02}",
            rng.random_range(2015..2024),
            rng.random_range(1..13),
            rng.random_range(1..29)
        ),
        2 => format!(
            "{:02}/{:02}/{}",
            rng.random_range(1..29),
            rng.random_range(1..13),
            rng.random_range(2015..2024)
        ),
        3 => format!("{}{}{}-{}", pick(rng, UPPER), pick(rng, UPPER), digits(rng, 2), pick(rng, UPPER)),
        4 => format!("({}) {}-{}", digits(rng, 3), digits(rng, 3), digits(rng, 4)),
        5 => format!("{:02}:{:02}", rng.random_range(0..24), rng.random_range(0..60)),
        6 => {
            let n = rng.random_range(4..9);
            let name: String = (0..n).map(|_| pick(rng, LOWER)).collect();
            format!("{name}{}@{}", digits(rng, 2), p.domain)
        }
        7 => format!(
            "{}-{}-{}",
            COUNTRIES.choose(rng).expect("non-empty"),
            digits(rng, 3),
            ["JUN", "PRO"].choose(rng).expect("non-empty")
        ),
        8 => format!(
            "v{}.{}.{}",
            rng.random_range(0..10),
            rng.random_range(0..10),
            rng.random_range(0..10)
        ),
        9 => format!("{}.{} EUR", rng.random_range(1..10000), digits(rng, 2)),
        10 => format!("{} {}{}", p.prefix, pick(rng, UPPER), digits(rng, 3)),
        _ => format!("#{}", (0..6).map(|_| pick(rng, HEX)).collect::<String>()),
    }
}

/// One clean single-column table from template `template`.
pub fn generate_column(template: usize, rows: usize, seed: u64) -> Table {
    let template = template % TEMPLATES.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Params {
        prefix: match template {
            10 => ["Room", "Gate", "Desk"].choose(&mut rng).expect("non-empty").to_string(),
            _ => (0..rng.random_range(2..4)).map(|_| pick(&mut rng, UPPER)).collect(),
        },
        width: rng.random_range(3..7),
        domain: ["example.com", "mail.org", "corp.net"]
            .choose(&mut rng)
            .expect("non-empty")
            .to_string(),
    };
    let values: Vec<String> = (0..rows).map(|_| value(template, &p, &mut rng)).collect();
    Table::new(
        format!("{}_{seed}", TEMPLATES[template]),
        vec![Column::from_strs(TEMPLATES[template], &values)],
    )
    .expect("single column")
}

/// `columns` tables cycling through the templates.
pub fn generate_corpus(columns: usize, rows: usize, seed: u64) -> Vec<Table> {
    (0..columns)
        .map(|i| generate_column(i, rows, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        .collect()
}
