//! Text formats: game files, structures, generator and strategy names, CSV.
//!
//! A game file starts with `agents <a>` and lists one `<mask>,<value>` record
//! per line, masks in decimal. Absent masks are worth 0, duplicates are
//! rejected, and lines starting with `#` are comments.

use std::fmt::Write as _;

use crate::adversarial::{level_tight_game, singleton_game};
use crate::bounds::StaircaseStep;
use crate::error::{Error, Result};
use crate::game::{shift_values, AgentCount, CoalitionStructure, Game, Shifted, ValueTable};
use crate::partition::{bottom_two_count, CountTable};
use crate::protocol::{AgentPolicy, AuditPolicy, SimulationStats, Strategy};
use crate::search::AnytimeResult;

use num_rational::Ratio;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// A parsed game file before any nonnegativity check, plus the line each
/// mask was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGame {
    pub table: ValueTable,
    lines: Vec<usize>,
}

impl RawGame {
    /// Rejects negative values, naming the offending line.
    pub fn into_game(self) -> Result<Game> {
        if let Some(i) = self.table.values.iter().position(|v| *v < 0.0) {
            return Err(parse_err(
                self.lines[i],
                format!("negative value {} for mask {}; pass --shift to normalize", self.table.values[i], i + 1),
            ));
        }
        Game::new(self.table.agents, self.table.values)
    }

    /// Subtracts the minimum entry when it is negative.
    pub fn into_shifted(self) -> Result<Shifted> {
        shift_values(self.table)
    }
}

pub fn parse_game_raw(text: &str) -> Result<RawGame> {
    let mut records =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = records.next().ok_or_else(|| parse_err(1, "missing `agents <a>` header"))?;
    let count = header
        .strip_prefix("agents")
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .map(str::trim)
        .ok_or_else(|| parse_err(header_line, format!("expected `agents <a>`, found `{header}`")))?;
    let count: usize =
        count.parse().map_err(|_| parse_err(header_line, format!("agent count `{count}` is not an integer")))?;
    let agents = AgentCount::new(count).map_err(|e| parse_err(header_line, e.to_string()))?;

    let mut values = vec![0.0; agents.coalition_count()];
    let mut lines = vec![0usize; agents.coalition_count()];
    for (line, record) in records {
        let (mask, value) = record
            .split_once(',')
            .ok_or_else(|| parse_err(line, format!("expected `<mask>,<value>`, found `{record}`")))?;
        let (mask, value) = (mask.trim(), value.trim());
        let mask: u32 = mask.parse().map_err(|_| parse_err(line, format!("mask `{mask}` is not a decimal integer")))?;
        if mask == 0 || mask > agents.full_mask() {
            return Err(parse_err(line, format!("mask {mask} outside 1..={}", agents.full_mask())));
        }
        let v: f64 = value.parse().map_err(|_| parse_err(line, format!("value `{value}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("value `{value}` is not finite")));
        }
        let slot = mask as usize - 1;
        if lines[slot] != 0 {
            return Err(parse_err(line, format!("mask {mask} already given on line {}", lines[slot])));
        }
        values[slot] = v;
        lines[slot] = line;
    }
    Ok(RawGame { table: ValueTable { agents, values }, lines })
}

/// Parses a game file and insists on nonnegative values.
pub fn parse_game(text: &str) -> Result<Game> {
    parse_game_raw(text)?.into_game()
}

/// Writes the nonzero entries in ascending mask order.
pub fn write_game(game: &Game) -> String {
    let mut out = format!("agents {}\n", game.agents());
    for (i, v) in game.values().iter().enumerate() {
        if *v != 0.0 {
            let _ = writeln!(out, "{},{v}", i + 1);
        }
    }
    out
}

/// Parses `{1,2}|{3}` for a game with `agents` agents.
pub fn parse_structure(text: &str, agents: AgentCount) -> Result<CoalitionStructure> {
    let text = text.trim();
    if text.is_empty() {
        return Err(parse_err(1, "empty structure"));
    }
    let mut masks = Vec::new();
    for part in text.split('|') {
        let inner = part
            .trim()
            .strip_prefix('{')
            .and_then(|p| p.strip_suffix('}'))
            .ok_or_else(|| parse_err(1, format!("expected `{{i,j,...}}`, found `{part}`")))?;
        let mut mask = 0u32;
        for m in inner.split(',') {
            let m = m.trim();
            let member: usize = m.parse().map_err(|_| parse_err(1, format!("agent `{m}` is not an integer")))?;
            if member == 0 || member > agents.get() {
                return Err(parse_err(1, format!("agent {member} outside 1..={}", agents.get())));
            }
            let bit = 1u32 << (member - 1);
            if mask & bit != 0 {
                return Err(parse_err(1, format!("agent {member} repeated")));
            }
            mask |= bit;
        }
        masks.push(mask);
    }
    CoalitionStructure::validate(agents, &masks).map_err(|e| parse_err(1, e.to_string()))
}

/// A named game generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Singleton,
    LevelTight(usize),
    UniformRandom(u64),
}

impl Generator {
    pub fn build(self, agents: AgentCount) -> Result<Game> {
        match self {
            Generator::Singleton => Ok(singleton_game(agents)),
            Generator::LevelTight(l) => level_tight_game(agents, l).map(|w| w.game),
            Generator::UniformRandom(seed) => Ok(Game::uniform_random(agents, seed)),
        }
    }
}

fn parse_number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("{what} `{s}` is not a valid number")))
}

/// `singleton`, `level-tight:<l>` or `uniform-random:<seed>`.
pub fn parse_generator(text: &str) -> Result<Generator> {
    match text.trim().split_once(':') {
        None if text.trim() == "singleton" => Ok(Generator::Singleton),
        Some(("level-tight", l)) => parse_number(l, "level").map(Generator::LevelTight),
        Some(("uniform-random", seed)) => parse_number(seed, "seed").map(Generator::UniformRandom),
        _ => Err(Error::InvalidParameter(format!(
            "unknown generator `{text}`; expected singleton, level-tight:<l> or uniform-random:<seed>"
        ))),
    }
}

fn probability(s: &str) -> Result<f64> {
    let p: f64 = parse_number(s, "probability")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(p)
}

/// `truthful`, `shirk:<fraction>` or `fabricate`.
pub fn parse_strategy(text: &str) -> Result<Strategy> {
    match text.trim().split_once(':') {
        None if text.trim() == "truthful" => Ok(Strategy::Truthful),
        None if text.trim() == "fabricate" => Ok(Strategy::Fabricate),
        Some(("shirk", f)) => Ok(Strategy::Shirk(probability(f)?)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown strategy `{text}`; expected truthful, shirk:<f> or fabricate"
        ))),
    }
}

/// A strategy, or `mixed:<search probability>:<strategy>`.
pub fn parse_policy(text: &str) -> Result<AgentPolicy> {
    match text.trim().split_once(':') {
        Some(("mixed", rest)) => {
            let (q, deviation) = rest
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter(format!("expected mixed:<q>:<strategy>, found `{text}`")))?;
            Ok(AgentPolicy::Mixed { search_prob: probability(q)?, deviation: parse_strategy(deviation)? })
        }
        _ => parse_strategy(text).map(AgentPolicy::Pure),
    }
}

/// `always`, `never` or `prob:<p>`.
pub fn parse_audit_policy(text: &str) -> Result<AuditPolicy> {
    match text.trim().split_once(':') {
        None if text.trim() == "always" => Ok(AuditPolicy::Always),
        None if text.trim() == "never" => Ok(AuditPolicy::Never),
        Some(("prob", p)) => Ok(AuditPolicy::Probability(probability(p)?)),
        _ => Err(Error::InvalidParameter(format!("unknown audit policy `{text}`; expected always, never or prob:<p>"))),
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(result: &AnytimeResult) -> String {
    let mut out = String::from("n,best_value,bound,phase\n");
    for c in &result.checkpoints {
        let _ = writeln!(out, "{},{},{},{}", c.n, c.best_value, opt(c.bound), c.phase);
    }
    out
}

/// The staircase as `n,k`, then a blank line and the splitting search's
/// realized ratio on the singleton game as `n,splitting_realized_ratio`.
pub fn bound_curve_csv(staircase: &[StaircaseStep], splitting: &[(u64, usize, Ratio<u64>)]) -> String {
    let mut out = String::from("n,k\n");
    for s in staircase {
        let _ = writeln!(out, "{},{}", s.n, opt(s.k));
    }
    out.push_str("\nn,splitting_realized_ratio\n");
    for (n, _, r) in splitting {
        let _ = writeln!(out, "{n},{}", *r.numer() as f64 / *r.denom() as f64);
    }
    out
}

/// `a,coalitions,structures,n_min` for every agent count up to `max`.
pub fn count_csv(max: AgentCount) -> String {
    let table = CountTable::new(max.get());
    let mut out = String::from("a,coalitions,structures,n_min\n");
    for a in 1..=max.get() {
        let agents = AgentCount::new(a).expect("at most max");
        let bell = table.bell(a).expect("within table");
        let _ = writeln!(out, "{a},{},{bell},{}", agents.full_mask(), bottom_two_count(agents));
    }
    out
}

/// Per-round rows; agents are printed 1-based.
pub fn protocol_csv(stats: &SimulationStats) -> String {
    let mut out = String::from("round,adopted_value,caught,auditor,target,transfer\n");
    for r in &stats.rounds {
        let (auditor, target) = match r.audit {
            Some((i, j)) => ((i + 1).to_string(), (j + 1).to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{auditor},{target},{}", r.round, r.adopted_value, r.caught, r.transfer);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{css1, Budget};

    fn a(n: usize) -> AgentCount {
        AgentCount::new(n).unwrap()
    }

    #[test]
    fn game_round_trip() {
        let g = Game::uniform_random(a(5), 3);
        assert_eq!(parse_game(&write_game(&g)).unwrap(), g);
        let g = singleton_game(a(4));
        let text = write_game(&g);
        assert_eq!(text, "agents 4\n1,1\n2,1\n4,1\n8,1\n");
        assert_eq!(parse_game(&text).unwrap(), g);
    }

    #[test]
    fn game_file_details() {
        let g = parse_game("# comment\n\nagents 2\n3, 2.5\n# another\n1,1\n").unwrap();
        assert_eq!(g.values(), &[1.0, 0.0, 2.5]);
    }

    #[test]
    fn game_file_errors_carry_lines() {
        let line = |text: &str| match parse_game(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line(""), 1);
        assert_eq!(line("agent 3\n"), 1);
        assert_eq!(line("agents 30\n"), 1);
        assert_eq!(line("agents 2\n1,1\n1,2\n"), 3);
        assert_eq!(line("agents 2\n4,1\n"), 2);
        assert_eq!(line("agents 2\n0,1\n"), 2);
        assert_eq!(line("# c\nagents 2\n2,x\n"), 3);
        assert_eq!(line("agents 2\n2,NaN\n"), 2);
        assert_eq!(line("agents 2\n2;1\n"), 2);
        assert_eq!(line("agents 2\n1,1\n2,-1\n"), 3);
    }

    #[test]
    fn negative_tables_shift_on_request() {
        let raw = parse_game_raw("agents 2\n1,-1\n2,1\n3,0\n").unwrap();
        let s = raw.into_shifted().unwrap();
        assert!(s.warning);
        assert_eq!(s.offset, 1.0);
        assert_eq!(s.game.values(), &[0.0, 2.0, 1.0]);
    }

    #[test]
    fn structures() {
        let cs = parse_structure("{3}|{1,2}", a(3)).unwrap();
        assert_eq!(cs.to_string(), "{1,2}|{3}");
        assert_eq!(parse_structure(&cs.to_string(), a(3)).unwrap(), cs);
        for bad in ["", "{1,2}", "{1,2}|{2,3}", "{1,1}|{2,3}", "{}|{1,2,3}", "{4}|{1,2,3}", "1,2|3", "{1,2}|{3"] {
            assert!(parse_structure(bad, a(3)).is_err(), "{bad}");
        }
    }

    #[test]
    fn generator_names() {
        assert_eq!(parse_generator("singleton").unwrap(), Generator::Singleton);
        assert_eq!(parse_generator("level-tight:4").unwrap(), Generator::LevelTight(4));
        assert_eq!(parse_generator("uniform-random:17").unwrap(), Generator::UniformRandom(17));
        for bad in ["", "singleton:1", "level-tight", "level-tight:x", "uniform-random:-1", "random"] {
            assert!(parse_generator(bad).is_err(), "{bad}");
        }
        assert!(Generator::LevelTight(2).build(a(5)).is_err());
    }

    #[test]
    fn strategy_names() {
        assert_eq!(parse_strategy("shirk:0.5").unwrap(), Strategy::Shirk(0.5));
        assert!(parse_strategy("shirk:2").is_err());
        assert_eq!(
            parse_policy("mixed:0.9:shirk:0").unwrap(),
            AgentPolicy::Mixed { search_prob: 0.9, deviation: Strategy::Shirk(0.0) }
        );
        assert_eq!(parse_policy("fabricate").unwrap(), AgentPolicy::Pure(Strategy::Fabricate));
        assert_eq!(parse_audit_policy("prob:0.1").unwrap(), AuditPolicy::Probability(0.1));
        assert!(parse_audit_policy("sometimes").is_err());
    }

    #[test]
    fn csv_formats() {
        let count = count_csv(a(10));
        assert!(count.starts_with("a,coalitions,structures,n_min\n1,1,1,1\n"));
        assert!(count.contains("\n3,7,5,4\n"));
        assert!(count.ends_with("\n10,1023,115975,512\n"));

        let r = css1(&singleton_game(a(4)), Budget::unlimited()).unwrap();
        let trace = trace_csv(&r);
        assert!(trace.starts_with("n,best_value,bound,phase\n8,1,4,bottom-two-complete\n"));
        assert!(trace.ends_with(",1,exhausted\n"));
    }
}
