//! Self-checks behind the `verify` subcommand.
//!
//! Each check yields one [`CheckOutcome`]; a suite passes when all of them do.
//! The bound formula is a parameter so a deliberately broken one can be fed
//! in to confirm the suite notices.

use std::fmt;

use crate::bounds::{
    minimality_check, minimality_spot_check, oracle_agreement, Agreement, BoundFormula, Css1Checkpoint,
};
use crate::error::Result;
use crate::game::{AgentCount, Game};
use crate::partition::{bell, bottom_two, enumerate_all, enumerate_level, stirling};
use crate::protocol::{
    exact_catch_probability, inspection_equilibrium, simulate_rounds, AgentPolicy, Assignment, AuditPolicy,
    InspectionParams, PayoffScheme, SearchPhase, SimulationConfig, Strategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    /// `check,status,detail`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "fail" };
        write!(f, "{},{status},{}", self.check, self.detail)
    }
}

fn checkpoint_name(c: Css1Checkpoint) -> String {
    match c {
        Css1Checkpoint::BottomTwo => "bottom-two".into(),
        Css1Checkpoint::AfterLevel(l) => format!("level {l}"),
    }
}

/// Oracle against staircase at every checkpoint for `a` agents.
pub fn check_oracle(a: usize, formula: BoundFormula) -> Result<CheckOutcome> {
    let rows = oracle_agreement(AgentCount::new(a)?, formula)?;
    let mut failures = Vec::new();
    let mut adjudicated = Vec::new();
    for r in &rows {
        let oracle = r.oracle.ratio().map(|x| x.to_string()).unwrap_or_else(|| "unbounded".into());
        let closed = r.closed_form.map(|k| k.to_string()).unwrap_or_else(|| "unbounded".into());
        match r.agreement {
            Agreement::Match => {}
            Agreement::Adjudicated(v) => {
                adjudicated.push(format!("{} matches {v:?} variant", checkpoint_name(r.checkpoint)))
            }
            Agreement::Unexplained => {
                failures.push(format!("{}: oracle {oracle} closed form {closed}", checkpoint_name(r.checkpoint)))
            }
        }
    }
    let detail = if !failures.is_empty() {
        failures.join("; ")
    } else if !adjudicated.is_empty() {
        adjudicated.join("; ")
    } else {
        format!("{} checkpoints agree", rows.len())
    };
    Ok(CheckOutcome { check: format!("oracle a={a}"), passed: failures.is_empty(), detail })
}

/// Stirling and Bell numbers against direct enumeration.
pub fn check_counting(max: usize) -> Result<CheckOutcome> {
    let mut failures = Vec::new();
    for a in 1..=max {
        let agents = AgentCount::new(a)?;
        if bell(a)? != enumerate_all(agents).count().into() {
            failures.push(format!("bell({a})"));
        }
        for l in 1..=a {
            if stirling(a, l)? != enumerate_level(agents, l)?.count().into() {
                failures.push(format!("stirling({a},{l})"));
            }
        }
        if bottom_two(agents).count() as u64 != 1 << (a - 1) {
            failures.push(format!("bottom-two a={a}"));
        }
    }
    let passed = failures.is_empty();
    let detail = if passed { format!("a <= {max}") } else { failures.join("; ") };
    Ok(CheckOutcome { check: "counting".into(), passed, detail })
}

pub fn check_minimality() -> Result<CheckOutcome> {
    let v = minimality_check(AgentCount::new(4)?)?;
    let passed = v.full_size_subsets_scanned == 6435 && v.covering.len() == 1 && v.unique_is_bottom_two;
    let detail = format!("{} eight-node subsets, {} covering", v.full_size_subsets_scanned, v.covering.len());
    Ok(CheckOutcome { check: "minimality a=4".into(), passed, detail })
}

pub fn check_spot_minimality(a: usize) -> Result<CheckOutcome> {
    let reps = minimality_spot_check(AgentCount::new(a)?)?;
    let bad: Vec<String> = reps.iter().filter(|r| !r.needs_at_least(2)).map(|r| r.omitted.to_string()).collect();
    let detail = if bad.is_empty() {
        format!("{} level-2 nodes each need >= 2 replacements", reps.len())
    } else {
        format!("replaceable by one node: {}", bad.join(" "))
    };
    Ok(CheckOutcome { check: format!("spot minimality a={a}"), passed: bad.is_empty(), detail })
}

/// Audit and catch frequencies at the inspection equilibrium, within 0.01.
pub fn check_protocol(rounds: u64, seed: u64) -> Result<CheckOutcome> {
    let agents = AgentCount::new(8)?;
    let game = Game::uniform_random(agents, seed);
    let params = InspectionParams::new(10.0, 1.0, 1.0)?;
    let eq = inspection_equilibrium(&params);
    let policy = AgentPolicy::Mixed { search_prob: eq.q_search, deviation: Strategy::Shirk(0.0) };
    let config = SimulationConfig {
        phase: SearchPhase::BottomTwo,
        policies: vec![policy; 4],
        audit: AuditPolicy::Probability(eq.p_audit),
        params,
        scheme: PayoffScheme::EqualWithinCoalition,
        rounds,
        seed,
    };
    let stats = simulate_rounds(&game, &config)?;
    // Shares are contiguous and equal, so every deal yields the same set of ranges.
    let deal = Assignment::new(agents, SearchPhase::BottomTwo, 4, seed)?;
    let expected_catch = exact_catch_probability(&game, &deal, &config.policies, config.audit)?;
    let audit_err = (stats.audit_frequency() - eq.p_audit).abs();
    let catch_err = (stats.catch_frequency() - expected_catch).abs();
    let passed = audit_err <= 0.01 && catch_err <= 0.01;
    let detail = format!(
        "audit {:.4} vs {:.4}; catch {:.4} vs {:.4}",
        stats.audit_frequency(),
        eq.p_audit,
        stats.catch_frequency(),
        expected_catch
    );
    Ok(CheckOutcome { check: "protocol convergence".into(), passed, detail })
}

fn outcome(check: &str, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome { check: check.into(), passed: false, detail: e.to_string() })
}

pub fn run_suite(level: Level, formula: BoundFormula) -> Vec<CheckOutcome> {
    let mut out: Vec<CheckOutcome> =
        (2..=5).map(|a| outcome(&format!("oracle a={a}"), check_oracle(a, formula))).collect();
    out.push(outcome("counting", check_counting(if level == Level::Full { 10 } else { 8 })));
    if level == Level::Full {
        out.push(outcome("oracle a=6", check_oracle(6, formula)));
        out.push(outcome("minimality a=4", check_minimality()));
        out.push(outcome("spot minimality a=5", check_spot_minimality(5)));
        out.push(outcome("protocol convergence", check_protocol(100_000, 1)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bound_after_level_variant, ModulusVariant};

    fn broken(a: usize, l: usize, v: ModulusVariant) -> Result<u64> {
        Ok(bound_after_level_variant(a, l, v)? + u64::from(l == 4))
    }

    #[test]
    fn quick_suite_passes() {
        let out = run_suite(Level::Quick, bound_after_level_variant);
        assert!(out.iter().all(|c| c.passed), "{out:?}");
    }

    #[test]
    fn broken_formula_is_named() {
        let c = check_oracle(5, broken).unwrap();
        assert!(!c.passed);
        assert!(c.detail.contains("level 4"), "{}", c.detail);
        assert!(c.to_string().starts_with("oracle a=5,fail,"));
    }
}
