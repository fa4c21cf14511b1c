use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::generate::{self, Instance};
use super::matching::{matching_decomposition, ZERO_SUM_TOL};
use super::{CaseResult, Suite};
use crate::arith::Opinion;
use crate::graph::{EdgeCounts, OpinionGraph};
use crate::model::{sync_update, sync_update_naive, windows};

/// Float-mode slack for order preservation.
pub const ORDER_SLACK: f64 = 1e-12;
/// Float-mode agreement between the prefix-sum and naive steps.
pub const ORACLE_TOL: f64 = 1e-9;
/// Relative reconstruction tolerance for float matchings.
pub const MATCHING_TOL: f64 = 1e-12;

const MAX_N: usize = 100;
const MAX_N_ORACLE: usize = 200;
const MAX_N_EXACT_ORACLE: usize = 40;
const MAX_N_PAIRS: usize = 60;
const MAX_N_MATCHING: usize = 50;

type Checker = fn(&mut ChaCha8Rng) -> CaseResult;

pub(crate) fn checker(suite: Suite) -> Checker {
    match suite {
        Suite::OrderPreserving => order_preserving,
        Suite::DisconnectedPreserving => disconnected_preserving,
        Suite::GapCriterion => gap_criterion,
        Suite::EdgePersistence => edge_persistence,
        Suite::HInductive => h_inductive,
        Suite::Matching => matching,
        Suite::OracleEquivalence => oracle_equivalence,
    }
}

fn input_json(inst: &Instance) -> serde_json::Value {
    json!({ "opinions": inst.opinions, "epsilon": inst.epsilon })
}

fn rational(x: f64) -> BigRational {
    <BigRational as Opinion>::from_f64(x)
}

fn exact(xs: &[f64]) -> Vec<BigRational> {
    xs.iter().map(|&x| rational(x)).collect()
}

fn first_descent<T: Opinion>(xs: &[T], slack: &T) -> Option<usize> {
    xs.windows(2).position(|w| w[1].add(slack) < w[0])
}

fn order_preserving(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N);
    let next = sync_update(&inst.opinions, &inst.epsilon);
    if let Some(i) = first_descent(&next, &ORDER_SLACK) {
        return CaseResult::fail(
            input_json(&inst),
            format!("float: x'[{}] = {} < x'[{i}] = {}", i + 1, next[i + 1], next[i]),
        );
    }
    let next = sync_update(&exact(&inst.opinions), &rational(inst.epsilon));
    if let Some(i) = first_descent(&next, &rational(0.0)) {
        return CaseResult::fail(input_json(&inst), format!("exact: x'[{}] < x'[{i}]", i + 1));
    }
    CaseResult::ok()
}

fn disconnected_preserving(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N);
    let xs = exact(&inst.opinions);
    let eps = rational(inst.epsilon);
    if OpinionGraph::from_sorted(&xs, eps.clone()).is_connected() {
        return CaseResult::vacuous();
    }
    let next = sync_update(&xs, &eps);
    if OpinionGraph::from_sorted(&next, eps).is_connected() {
        return CaseResult::fail(input_json(&inst), "disconnected graph became connected after one step");
    }
    CaseResult::ok()
}

fn gap_criterion(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N);
    let g = OpinionGraph::from_sorted(&inst.opinions, inst.epsilon);
    let (fast, brute) = (g.is_connected(), g.is_connected_bruteforce());
    if fast != brute {
        return CaseResult::fail(input_json(&inst), format!("gap test says {fast}, graph search says {brute}"));
    }
    let comps = g.components();
    let covers = comps.first().map(|r| *r.start()) == Some(0)
        && comps.last().map(|r| *r.end()) == Some(inst.opinions.len() - 1)
        && comps.windows(2).all(|w| *w[0].end() + 1 == *w[1].start());
    if !covers || (comps.len() == 1) != fast {
        return CaseResult::fail(input_json(&inst), format!("components {comps:?} do not partition consistently"));
    }
    CaseResult::ok()
}

fn edge_persistence(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N_PAIRS);
    let xs = exact(&inst.opinions);
    let eps = rational(inst.epsilon);
    let before = windows(&xs, &eps);
    let after = windows(&sync_update(&xs, &eps), &eps);
    let mut exercised = false;
    for i in 0..xs.len() {
        for j in (i + 1)..=before[i].hi {
            if !EdgeCounts::from_windows(before[i], before[j]).persistence_holds() {
                continue;
            }
            exercised = true;
            if !after[i].contains(j) {
                let mut input = input_json(&inst);
                input["edge"] = json!([i, j]);
                return CaseResult::fail(input, format!("edge ({i}, {j}) met the inequality but was lost"));
            }
        }
    }
    if exercised {
        CaseResult::ok()
    } else {
        CaseResult::vacuous()
    }
}

fn h_inductive(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N_PAIRS);
    let xs = exact(&inst.opinions);
    let eps = rational(inst.epsilon);
    if !OpinionGraph::from_sorted(&xs, eps.clone()).h_statement() {
        return CaseResult::vacuous();
    }
    let next = sync_update(&xs, &eps);
    if !OpinionGraph::from_sorted(&next, eps).h_statement() {
        return CaseResult::fail(input_json(&inst), "H held at t but not at t + 1");
    }
    CaseResult::ok()
}

fn matching(rng: &mut ChaCha8Rng) -> CaseResult {
    let n = rng.random_range(1..=MAX_N_MATCHING);
    let lambdas = generate::coefficients(rng, n);
    let xs = generate::points(rng, n);
    let input = json!({ "lambdas": lambdas, "xs": xs });

    let d = match matching_decomposition(&lambdas, &xs) {
        Ok(d) => d,
        Err(e) => return CaseResult::fail(input, format!("float: {e}")),
    };
    let direct: f64 = lambdas.iter().zip(&xs).map(|(l, x)| l * x).sum();
    let scale = 1.0 + lambdas.iter().map(|l| l.abs()).sum::<f64>() * xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if (d.reconstruct(&xs) - direct).abs() > MATCHING_TOL * scale {
        return CaseResult::fail(input, format!("float reconstruction {} vs {}", d.reconstruct(&xs), direct));
    }
    if (d.coefficient_sum() - d.total_positive_mass).abs() > ZERO_SUM_TOL.max(MATCHING_TOL * scale) {
        return CaseResult::fail(input, "float mass identity");
    }
    if let Some(t) =
        d.terms.iter().find(|t| !(t.coefficient >= 0.0 && lambdas[t.positive] > 0.0 && lambdas[t.negative] < 0.0))
    {
        return CaseResult::fail(input, format!("float sign discipline: {t:?}"));
    }

    // exact: project the rational image onto zero sum
    let mut ql = exact(&lambdas);
    let mean = ql.iter().fold(rational(0.0), |a, l| a + l) / rational(n as f64);
    for l in &mut ql {
        *l -= &mean;
    }
    let qx = exact(&xs);
    let d = match matching_decomposition(&ql, &qx) {
        Ok(d) => d,
        Err(e) => return CaseResult::fail(input, format!("exact: {e}")),
    };
    let direct = ql.iter().zip(&qx).fold(rational(0.0), |a, (l, x)| a + l * x);
    let zero = rational(0.0);
    if d.reconstruct(&qx) != direct {
        return CaseResult::fail(input, "exact reconstruction");
    }
    if d.coefficient_sum() != d.total_positive_mass {
        return CaseResult::fail(input, "exact mass identity");
    }
    if d.terms.iter().any(|t| !(t.coefficient >= zero && ql[t.positive] > zero && ql[t.negative] < zero)) {
        return CaseResult::fail(input, "exact sign discipline");
    }
    CaseResult::ok()
}

fn oracle_equivalence(rng: &mut ChaCha8Rng) -> CaseResult {
    let inst = generate::instance(rng, MAX_N_ORACLE);
    let fast = sync_update(&inst.opinions, &inst.epsilon);
    let naive = sync_update_naive(&inst.opinions, &inst.epsilon);
    if let Some(i) = (0..fast.len()).find(|&i| (fast[i] - naive[i]).abs() > ORACLE_TOL) {
        return CaseResult::fail(
            input_json(&inst),
            format!("float: agent {i}: prefix-sum {} vs naive {}", fast[i], naive[i]),
        );
    }
    let small = generate::instance(rng, MAX_N_EXACT_ORACLE);
    let xs = exact(&small.opinions);
    let eps = rational(small.epsilon);
    if sync_update(&xs, &eps) != sync_update_naive(&xs, &eps) {
        return CaseResult::fail(input_json(&small), "exact: prefix-sum and naive steps differ");
    }
    CaseResult::ok()
}
