//! Instance generators shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use maxsimp::types::{Clause, Lit};
use maxsimp::WcnfInstance;

/// Deterministic random instance with a planted satisfying assignment for
/// the hard part: 3-literal clauses with a hard/soft mix, plus equivalence
/// pairs and unit clauses so the presolve stages have material to work on.
pub fn benchmark_instance(seed: u64, num_vars: u32, num_clauses: usize) -> WcnfInstance {
    let mut rng = StdRng::seed_from_u64(seed);
    let planted: Vec<bool> = (0..num_vars).map(|_| rng.random_bool(0.5)).collect();
    let mut inst = WcnfInstance {
        num_vars,
        ..WcnfInstance::default()
    };
    let lit = |rng: &mut StdRng, v: u32| {
        if rng.random_bool(0.5) {
            Lit::positive(v)
        } else {
            Lit::negative(v)
        }
    };
    let agreeing = |planted: &[bool], v: u32| {
        if planted[v as usize - 1] {
            Lit::positive(v)
        } else {
            Lit::negative(v)
        }
    };
    for i in 0..num_clauses {
        match i % 10 {
            0 => {
                // unit hard clause on the planted value: fixing material
                let v = rng.random_range(1..=num_vars);
                inst.hard.push(Clause::new(vec![agreeing(&planted, v)]));
            }
            1 | 2 => {
                // complementary pair over opposite planted values:
                // aggregation material
                let a = rng.random_range(1..=num_vars);
                let mut b = rng.random_range(1..=num_vars);
                let mut tries = 0;
                while (b == a || planted[b as usize - 1] == planted[a as usize - 1]) && tries < 64 {
                    b = rng.random_range(1..=num_vars);
                    tries += 1;
                }
                if b != a && planted[b as usize - 1] != planted[a as usize - 1] {
                    let (la, lb) = (Lit::positive(a), Lit::positive(b));
                    inst.hard.push(Clause::new(vec![la, lb]));
                    inst.hard.push(Clause::new(vec![!la, !lb]));
                }
            }
            3..=5 => {
                let mut lits: Vec<Lit> = pick_vars(&mut rng, num_vars, 3)
                    .into_iter()
                    .map(|v| lit(&mut rng, v))
                    .collect();
                // keep the planted assignment satisfying
                let fix = rng.random_range(0..lits.len());
                lits[fix] = agreeing(&planted, lits[fix].var());
                inst.hard.push(Clause::new(lits));
            }
            _ => {
                let len = rng.random_range(1..=3);
                let lits: Vec<Lit> = pick_vars(&mut rng, num_vars, len)
                    .into_iter()
                    .map(|v| lit(&mut rng, v))
                    .collect();
                inst.soft
                    .push((Clause::new(lits), rng.random_range(1..=20)));
            }
        }
    }
    inst
}

fn pick_vars(rng: &mut StdRng, num_vars: u32, len: usize) -> Vec<u32> {
    let mut vars = Vec::with_capacity(len);
    while vars.len() < len.min(num_vars as usize) {
        let v = rng.random_range(1..=num_vars);
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    vars
}
