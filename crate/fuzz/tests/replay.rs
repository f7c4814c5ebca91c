//! Replays the checked-in corpus on stable and runs a short, seeded
//! mutation pass over it, so the targets are exercised without cargo-fuzz.

use std::path::Path;

use beatdesign_fuzz::TARGETS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Overridden by `REPLAY_MUTANTS` for a longer run.
fn mutants_per_seed() -> usize {
    std::env::var("REPLAY_MUTANTS").ok().and_then(|v| v.parse().ok()).unwrap_or(300)
}

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8], other: &[u8]) -> Vec<u8> {
    let mut v = seed.to_vec();
    for _ in 0..rng.random_range(1..=4) {
        let len = v.len();
        match rng.random_range(0..6) {
            0 if len > 0 => {
                let i = rng.random_range(0..len);
                v[i] ^= 1 << rng.random_range(0..8);
            }
            1 if len > 0 => {
                let i = rng.random_range(0..len);
                v[i] = *b"0123456789-.,:\n\"{}[]eE \0"
                    .get(rng.random_range(0..25))
                    .unwrap_or(&b'9');
            }
            2 => {
                let i = rng.random_range(0..=len);
                let byte = rng.random();
                v.insert(i, byte);
            }
            3 if len > 0 => {
                let i = rng.random_range(0..len);
                let j = rng.random_range(i..=len.min(i + 64));
                v.drain(i..j);
            }
            4 => v.truncate(rng.random_range(0..=len)),
            _ if !other.is_empty() => {
                let i = rng.random_range(0..=len);
                let a = rng.random_range(0..other.len());
                let b = rng.random_range(a..=other.len().min(a + 256));
                v.splice(i..i, other[a..b].iter().copied());
            }
            _ => {}
        }
    }
    v
}

#[test]
fn every_target_has_seeds_it_accepts() {
    for (name, run) in TARGETS {
        let seeds = seeds(name);
        assert!(!seeds.is_empty(), "{name} has no corpus");
        for (file, bytes) in seeds {
            assert!(run(&bytes), "{name} rejects its seed {file}");
        }
    }
}

#[test]
fn seeded_mutations_never_panic() {
    for (k, (name, run)) in TARGETS.iter().enumerate() {
        let seeds = seeds(name);
        let n = mutants_per_seed();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for (s, (_, bytes)) in seeds.iter().enumerate() {
            let other = &seeds[(s + 1) % seeds.len()].1;
            for _ in 0..n {
                let input = mutate(&mut rng, bytes, other);
                if let Err(e) = std::panic::catch_unwind(|| run(&input)) {
                    let dump = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("crash-{name}"));
                    std::fs::write(&dump, &input).unwrap();
                    eprintln!("input saved to {}", dump.display());
                    std::panic::resume_unwind(e);
                }
            }
        }
    }
}

#[test]
fn empty_and_garbage_inputs_are_rejected_quietly() {
    for (name, run) in TARGETS {
        for input in [&b""[..], b"\0", b"\xff\xfe", b"{}", b"[]", b",,,\n,,,"] {
            let _ = (name, run(input));
        }
    }
}
