//! Deterministic synthetic knowledge graphs for tests, benches and demos.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::RawTriple;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<RawTriple>,
    pub valid: Vec<RawTriple>,
    pub test: Vec<RawTriple>,
}

fn row(h: String, r: &str, t: String) -> RawTriple {
    (h, r.to_owned(), t)
}

/// A small social/sports graph with planted relation-symmetrical patterns.
///
/// 80 people fall into 10 groups of 8. Every member of a group shares the
/// group's team, sport and city, and has a few friend/colleague links inside
/// the group, so members of one group are symmetrical around many pivots.
/// Roughly 100 entities and 600 triples; 5% each go to valid and test.
pub fn planted_kg(seed: u64) -> Splits {
    const GROUPS: usize = 10;
    const PER_GROUP: usize = 8;
    let mut rng = seed::rng(seed, &[0x5e7]);
    let person = |g: usize, i: usize| format!("person_{g}_{i}");
    let team = |g: usize| format!("team_{g}");
    let sport = |g: usize| format!("sport_{}", g % 4);
    let city = |g: usize| format!("city_{}", g % 5);

    let mut all = Vec::new();
    for g in 0..GROUPS {
        all.push(row(team(g), "based_in", city(g)));
        all.push(row(team(g), "team_sport", sport(g)));
        for i in 0..PER_GROUP {
            all.push(row(person(g, i), "member_of", team(g)));
            all.push(row(person(g, i), "plays", sport(g)));
            all.push(row(person(g, i), "lives_in", city(g)));
            for rel in ["friend_of", "friend_of", "colleague_of", "colleague_of"] {
                let mut j = rng.gen_range(0..PER_GROUP - 1);
                if j >= i {
                    j += 1;
                }
                all.push(row(person(g, i), rel, person(g, j)));
            }
        }
    }
    all.sort();
    all.dedup();
    all.shuffle(&mut rng);
    let held = all.len() / 20;
    let test = all.split_off(all.len() - held);
    let valid = all.split_off(all.len() - held);
    Splits {
        train: all,
        valid,
        test,
    }
}

/// Split sizes of the public WN18RR release.
pub const WN18RR_ENTITIES: usize = 40_943;
pub const WN18RR_RELATIONS: usize = 11;
pub const WN18RR_TRAIN: usize = 86_835;
pub const WN18RR_VALID: usize = 3_034;
pub const WN18RR_TEST: usize = 3_134;

/// Synthetic triples with exactly the WN18RR split sizes and vocabulary
/// counts. Structure is meaningless; only the counts matter.
pub fn wn18rr_shaped() -> Splits {
    let n = WN18RR_ENTITIES;
    let e = |i: usize| format!("{:08}", i % n);
    let r = |i: usize| format!("_rel_{}", i % WN18RR_RELATIONS);
    // Tail offsets 1..=3 keep train triples distinct; valid and test use
    // offsets 5 and 6 so they never collide with train.
    let train = (0..WN18RR_TRAIN)
        .map(|i| (e(i), r(i), e(i % n + 1 + i / n)))
        .collect();
    let valid = (0..WN18RR_VALID).map(|i| (e(i), r(i), e(i + 5))).collect();
    let test = (0..WN18RR_TEST).map(|i| (e(i), r(i), e(i + 6))).collect();
    Splits { train, valid, test }
}

pub fn write_triples(path: &Path, rows: &[RawTriple]) -> io::Result<()> {
    let mut text = String::with_capacity(rows.len() * 32);
    for (h, r, t) in rows {
        text.push_str(h);
        text.push('\t');
        text.push_str(r);
        text.push('\t');
        text.push_str(t);
        text.push('\n');
    }
    fs::write(path, text)
}

/// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
pub fn write_splits(dir: &Path, splits: &Splits) -> io::Result<[PathBuf; 3]> {
    let paths = [dir.join("train.txt"), dir.join("valid.txt"), dir.join("test.txt")];
    write_triples(&paths[0], &splits.train)?;
    write_triples(&paths[1], &splits.valid)?;
    write_triples(&paths[2], &splits.test)?;
    Ok(paths)
}
