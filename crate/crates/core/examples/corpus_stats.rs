//! Aggregates statistics per shard and merges them into corpus totals.

use ilforge::caption::parse_pair;
use ilforge::document::parse_document;
use ilforge::stats::{aggregate, language_table_csv, merge, stats_json, DomainCategories, WhitespaceTokenizer};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/stats");
    let docs: Vec<_> = std::fs::read_to_string(format!("{dir}/docs50.jsonl"))
        .unwrap()
        .lines()
        .map(|l| parse_document(l).unwrap())
        .collect();
    let pairs: Vec<_> = std::fs::read_to_string(format!("{dir}/pairs50.jsonl"))
        .unwrap()
        .lines()
        .map(|l| parse_pair(l).unwrap())
        .collect();
    let (d1, d2) = docs.split_at(20);
    let (p1, p2) = pairs.split_at(40);
    let left = aggregate(d1, p1, &WhitespaceTokenizer);
    let right = aggregate(d2, p2, &WhitespaceTokenizer);
    let total = merge(&left, &right).unwrap();
    print!("{}", language_table_csv(&total));
    println!("{}", stats_json(&total, &DomainCategories::bundled()));
}
