//! Seeded random generation of small validated systems, used to drive the
//! cross-validation harness.

use crate::alphabet::DependenceAlphabet;
use crate::tpds::Tpds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random dependence alphabet with 2–4 letters. Dependence-rich alphabets
/// are favored: sparse ones make most push words violate (P1) and yield
/// degenerate systems.
pub fn random_alphabet(rng: &mut ChaCha8Rng) -> DependenceAlphabet {
    let size = rng.gen_range(2..=4usize);
    let names: Vec<String> = (0..size)
        .map(|i| ((b'a' + i as u8) as char).to_string())
        .collect();
    let mut pairs = Vec::new();
    for i in 0..size {
        for j in i + 1..size {
            if rng.gen_bool(0.65) {
                pairs.push((i, j));
            }
        }
    }
    DependenceAlphabet::new(names, &pairs)
}

/// One attempt at a random system: 1–3 states, 2–7 transitions with push
/// words of at most 2 letters chosen to satisfy (P1) by construction.
/// Returns the saturated system if it passes (P2) and loop-connectedness.
pub fn random_system(rng: &mut ChaCha8Rng) -> Option<Tpds> {
    let alpha = random_alphabet(rng);
    let nstates = rng.gen_range(1..=3usize);
    let state_names: Vec<String> = (0..nstates).map(|i| format!("s{}", i)).collect();
    let mut sys = Tpds::new(alpha.clone(), state_names);
    let ntrans = rng.gen_range(2..=7usize);
    for _ in 0..ntrans {
        let p = rng.gen_range(0..nstates);
        let q = rng.gen_range(0..nstates);
        let a = rng.gen_range(0..alpha.len());
        // (P1): every pushed letter c must have D(c) ⊆ D(a)
        let allowed: Vec<usize> = (0..alpha.len())
            .filter(|&c| alpha.dep_of(c).is_subset_of(alpha.dep_of(a)))
            .collect();
        let len = rng.gen_range(0..=2usize);
        let mut w = Vec::new();
        for _ in 0..len {
            if allowed.is_empty() {
                break;
            }
            w.push(allowed[rng.gen_range(0..allowed.len())]);
        }
        sys.transitions.insert((p, a, w, q));
    }
    if sys.check_p1().is_some() || sys.check_p2().is_some() {
        return None;
    }
    let mut sat = sys.saturate().ok()?;
    match sat.check_loop_connected() {
        Ok(None) => Some(sat),
        _ => None,
    }
}

/// Rejection-samples `count` validated loop-connected systems from a seed.
pub fn sample_systems(seed: u64, count: usize) -> Vec<Tpds> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        if let Some(sys) = random_system(&mut rng) {
            out.push(sys);
        }
    }
    out
}
