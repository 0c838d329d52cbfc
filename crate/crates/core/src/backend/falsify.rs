use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{Kind, Refinement, SensExpr};
use crate::constraints::{Mode, Obligation};
use crate::semantics::{eval_in, eval_refinements, ExtReal, ProbeConfig, Valuation};
use crate::typing::Constraint;

/// Default number of sampled valuations.
pub const DEFAULT_BUDGET: usize = 4000;

/// Probe points whose `Sup` values never exceed the true supremum: sizes
/// stay finite under standard valuations.
pub fn lower_bound_probes(mode: Mode) -> ProbeConfig {
    let mut p = ProbeConfig::default();
    if mode == Mode::Mixed {
        p.size.retain(ExtReal::is_finite);
    }
    p
}

fn empty_valuation(mode: Mode) -> Valuation {
    match mode {
        Mode::Mixed => Valuation::standard(),
        Mode::Uniform => Valuation::uniform(),
    }
}

fn contains_sup(s: &SensExpr) -> bool {
    match s {
        SensExpr::Const(_) | SensExpr::Var(_) => false,
        SensExpr::Sup { .. } => true,
        SensExpr::Plus(a, b) | SensExpr::Times(a, b) | SensExpr::Max(a, b) => contains_sup(a) || contains_sup(b),
        SensExpr::Case {
            scrutinee, zero, succ, ..
        } => contains_sup(scrutinee) || contains_sup(zero) || contains_sup(succ),
    }
}

/// Whether `rho` assigns every variable of `c`, satisfies its refinements
/// and makes `lhs < rhs`. Evaluation of a `Sup` on the right never
/// overshoots, so a `true` answer is a genuine counterexample; a `Sup` on
/// the left makes the check give up.
pub fn confirm_witness(c: &Constraint, rho: &Valuation, mode: Mode) -> bool {
    if contains_sup(&c.lhs) {
        return false;
    }
    for (n, k) in c.idx_env.iter() {
        match rho.get(n) {
            None => return false,
            Some(v) => {
                let nat_ok = mode == Mode::Uniform || k == Kind::Sens || (v.is_natural() && v.is_finite());
                if !nat_ok {
                    return false;
                }
            }
        }
    }
    let vm = mode.valuation_mode();
    let probes = lower_bound_probes(mode);
    if !eval_refinements(&c.refinements, rho, &probes, vm) {
        return false;
    }
    eval_in(&c.lhs, rho, &probes, vm) < eval_in(&c.rhs, rho, &probes, vm)
}

fn grid(kind: Kind, mode: Mode) -> Vec<ExtReal> {
    let r = ExtReal::from_ratio;
    match (mode, kind) {
        (Mode::Mixed, Kind::Size) => (0..=6).map(ExtReal::from_int).collect(),
        (Mode::Mixed, Kind::Sens) => vec![r(0, 1), r(1, 2), r(1, 1), r(2, 1), r(3, 1), ExtReal::Infinity],
        (Mode::Uniform, _) => vec![
            r(0, 1),
            r(1, 4),
            r(1, 2),
            r(3, 4),
            r(1, 1),
            r(3, 2),
            r(2, 1),
            r(3, 1),
            ExtReal::Infinity,
        ],
    }
}

fn sample(kind: Kind, mode: Mode, rng: &mut ChaCha8Rng) -> ExtReal {
    let natural = |rng: &mut ChaCha8Rng| {
        let hi = match rng.gen_range(0..10) {
            0..=4 => 4,
            5..=7 => 12,
            _ => 32,
        };
        ExtReal::from_int(rng.gen_range(0..=hi))
    };
    let rational = |rng: &mut ChaCha8Rng| ExtReal::from_ratio(rng.gen_range(0..=64), rng.gen_range(1..=8));
    match (mode, kind) {
        (Mode::Mixed, Kind::Size) => natural(rng),
        _ => match rng.gen_range(0..10) {
            0..=3 => natural(rng),
            4..=8 => rational(rng),
            _ => ExtReal::Infinity,
        },
    }
}

/// Fills the variables fixed by `S = 0` (for a variable `S`) and `S = i + 1`
/// from the ones already assigned. `false` if no consistent value exists.
fn solve_determined(c: &Constraint, determined: &[String], rho: &mut Valuation, mode: Mode) -> bool {
    let vm = mode.valuation_mode();
    let probes = lower_bound_probes(mode);
    let mut pending: Vec<&String> = determined.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|v| {
            for r in c.refinements.iter() {
                match r {
                    Refinement::IsZero(SensExpr::Var(x)) if x == *v => {
                        rho.set(v, ExtReal::zero());
                        return false;
                    }
                    Refinement::IsSucc(s, b) if b == *v && s.free_vars().iter().all(|x| rho.get(x).is_some()) => {
                        let val = eval_in(s, rho, &probes, vm);
                        // S below one has no predecessor; leave it for the
                        // refinement check to reject.
                        rho.set(v, if val >= ExtReal::one() { val.pred() } else { ExtReal::zero() });
                        return false;
                    }
                    _ => {}
                }
            }
            true
        });
        if pending.len() == before {
            return false;
        }
    }
    true
}

fn determined_vars(c: &Constraint) -> Vec<String> {
    let mut out = Vec::new();
    for r in c.refinements.iter() {
        let v = match r {
            Refinement::IsZero(SensExpr::Var(x)) => x,
            Refinement::IsSucc(_, b) => b,
            _ => continue,
        };
        if c.idx_env.contains(v) && !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// Searches for a valuation violating `c`: a systematic grid first, then
/// seeded random sampling. Every returned witness passes
/// [`confirm_witness`].
pub fn falsify(c: &Constraint, mode: Mode, budget: usize, seed: u64) -> Option<Valuation> {
    if contains_sup(&c.lhs) {
        return None;
    }
    let determined = determined_vars(c);
    let free: Vec<(String, Kind)> = c
        .idx_env
        .iter()
        .filter(|(n, _)| !determined.iter().any(|d| d == n))
        .map(|(n, k)| (n.to_string(), k))
        .collect();
    let mut tried = 0usize;
    let attempt = |vals: Vec<ExtReal>, tried: &mut usize| -> Option<Valuation> {
        *tried += 1;
        let mut rho = empty_valuation(mode);
        for ((n, _), v) in free.iter().zip(vals) {
            rho.set(n, v);
        }
        if !solve_determined(c, &determined, &mut rho, mode) {
            return None;
        }
        confirm_witness(c, &rho, mode).then_some(rho)
    };

    let grids: Vec<Vec<ExtReal>> = free.iter().map(|(_, k)| grid(*k, mode)).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    if total <= budget / 2 {
        let mut idx = vec![0usize; grids.len()];
        loop {
            let vals = idx.iter().zip(&grids).map(|(i, g)| g[*i].clone()).collect();
            if let Some(w) = attempt(vals, &mut tried) {
                return Some(w);
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < grids[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while tried < budget {
        let vals = free.iter().map(|(_, k)| sample(*k, mode, &mut rng)).collect();
        if let Some(w) = attempt(vals, &mut tried) {
            return Some(w);
        }
    }
    None
}

/// [`falsify`] on an obligation.
pub fn falsify_obligation(o: &Obligation, mode: Mode, budget: usize, seed: u64) -> Option<Valuation> {
    falsify(&o.as_constraint(&Default::default()), mode, budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{IdxEnv, RefinementSet};
    use crate::syntax::parse_sens;

    fn c(env: &[(&str, Kind)], refs: RefinementSet, lhs: &str, rhs: &str) -> Constraint {
        let mut k = Constraint::closed(parse_sens(lhs).unwrap(), parse_sens(rhs).unwrap());
        k.idx_env = IdxEnv::from_pairs(env);
        k.refinements = refs;
        k
    }

    #[test]
    fn examples() {
        let n = [("i", Kind::Size)];
        let sq = c(&n, RefinementSet::new(), "i * i", "i");
        let w = falsify(&sq, Mode::Uniform, DEFAULT_BUDGET, 1).unwrap();
        let v = w.get("i").unwrap().clone();
        assert!(v > ExtReal::zero() && v < ExtReal::one());
        assert!(falsify(&sq, Mode::Mixed, DEFAULT_BUDGET, 1).is_none());
        let w = falsify(&c(&n, RefinementSet::new(), "2 * i", "1"), Mode::Mixed, DEFAULT_BUDGET, 1).unwrap();
        assert_eq!(w.get("i"), Some(&ExtReal::zero()));
        assert!(falsify(&c(&n, RefinementSet::new(), "i * i + 1", "2 * i"), Mode::Mixed, DEFAULT_BUDGET, 1).is_none());
    }

    #[test]
    fn refinements_drive_instantiation() {
        let env = [("s", Kind::Size), ("i", Kind::Size)];
        let refs = RefinementSet::new().with(Refinement::IsSucc(SensExpr::var("s"), "i".into()));
        assert!(falsify(&c(&env, refs.clone(), "i + 1", "s"), Mode::Mixed, 500, 3).is_none());
        let w = falsify(&c(&env, refs, "i", "s"), Mode::Mixed, 500, 3).unwrap();
        assert!(confirm_witness(&c(&env, RefinementSet::new(), "i", "s"), &w, Mode::Mixed));
    }

    #[test]
    fn seeded_runs_repeat() {
        let k = c(&[("r", Kind::Sens), ("q", Kind::Sens)], RefinementSet::new(), "r * q + 40", "r + q");
        assert_eq!(falsify(&k, Mode::Mixed, 300, 9), falsify(&k, Mode::Mixed, 300, 9));
    }
}
