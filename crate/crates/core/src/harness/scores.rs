//! Human-normalized scores.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Largest tolerated gap, in percentage points, between a printed
/// normalized score and the recomputed one. Printed values carry one
/// decimal.
pub const PRINT_TOLERANCE: f64 = 0.05;

/// Human-level threshold in percent.
pub const HUMAN_LEVEL: f64 = 75.0;

/// The 49-game score table shipped with the crate.
pub const APPENDIX_SCORES: &str = include_str!("../../data/atari_scores.csv");

/// `100 * (raw - random) / (human - random)`, unrounded.
pub fn normalize_score(raw: f64, random: f64, human: f64) -> Result<f64> {
    let span = human - random;
    if span == 0.0 {
        return Err(Error::DegenerateScale(human));
    }
    Ok(100.0 * (raw - random) / span)
}

/// Round to one decimal for display.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Round to two decimals for display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// One CSV row: reference scores, both agents' raw scores and, optionally,
/// the normalized values as printed alongside them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GameScores {
    pub name: String,
    pub random: f64,
    pub human: f64,
    pub dqn: f64,
    pub ours: f64,
    #[serde(default)]
    pub dqn_norm: Option<f64>,
    #[serde(default)]
    pub ours_norm: Option<f64>,
}

pub fn read_scores<R: Read>(reader: R) -> Result<Vec<GameScores>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    for required in ["name", "random", "human", "dqn", "ours"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Format(format!("score CSV lacks a {required:?} column")));
        }
    }
    csv.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Dqn,
    Ours,
}

impl Agent {
    pub fn label(self) -> &'static str {
        match self {
            Agent::Dqn => "DQN",
            Agent::Ours => "Ours",
        }
    }
}

/// One agent's score in one game.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub name: String,
    pub random: f64,
    pub human: f64,
    pub raw: f64,
    /// Unrounded percent.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLine {
    pub dqn: ScoreRow,
    pub ours: ScoreRow,
    /// Agent with the strictly higher normalized score; none on a tie.
    pub better: Option<Agent>,
}

/// A printed normalized value that disagrees with the recomputed one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub name: String,
    pub agent: Agent,
    pub printed: f64,
    pub computed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreReport {
    pub lines: Vec<ScoreLine>,
    pub dqn_human_level: usize,
    pub ours_human_level: usize,
    pub ours_better: usize,
    pub dqn_better: usize,
    pub mismatches: Vec<Mismatch>,
}

fn row(g: &GameScores, raw: f64) -> Result<ScoreRow> {
    Ok(ScoreRow {
        name: g.name.clone(),
        random: g.random,
        human: g.human,
        raw,
        normalized: normalize_score(raw, g.random, g.human)?,
    })
}

pub fn score_report(games: &[GameScores]) -> Result<ScoreReport> {
    let mut report = ScoreReport::default();
    for g in games {
        let dqn = row(g, g.dqn)?;
        let ours = row(g, g.ours)?;
        for (agent, printed, computed) in [
            (Agent::Dqn, g.dqn_norm, dqn.normalized),
            (Agent::Ours, g.ours_norm, ours.normalized),
        ] {
            if let Some(printed) = printed {
                if (printed - computed).abs() > PRINT_TOLERANCE {
                    report.mismatches.push(Mismatch {
                        name: g.name.clone(),
                        agent,
                        printed,
                        computed,
                    });
                }
            }
        }
        if dqn.normalized >= HUMAN_LEVEL {
            report.dqn_human_level += 1;
        }
        if ours.normalized >= HUMAN_LEVEL {
            report.ours_human_level += 1;
        }
        let better = if ours.normalized > dqn.normalized {
            report.ours_better += 1;
            Some(Agent::Ours)
        } else if dqn.normalized > ours.normalized {
            report.dqn_better += 1;
            Some(Agent::Dqn)
        } else {
            None
        };
        report.lines.push(ScoreLine { dqn, ours, better });
    }
    Ok(report)
}

impl ScoreReport {
    pub fn to_markdown(&self) -> String {
        let header = ["Game", "Random", "Human", "DQN", "Ours", "DQN (norm.)", "Ours (norm.)"];
        let rows: Vec<Vec<String>> = self
            .lines
            .iter()
            .map(|l| {
                let mark = |agent: Agent, v: f64| {
                    let s = format!("{:.1}%", round1(v));
                    if l.better == Some(agent) {
                        format!("**{s}**")
                    } else {
                        s
                    }
                };
                vec![
                    l.dqn.name.clone(),
                    l.dqn.random.to_string(),
                    l.dqn.human.to_string(),
                    l.dqn.raw.to_string(),
                    l.ours.raw.to_string(),
                    mark(Agent::Dqn, l.dqn.normalized),
                    mark(Agent::Ours, l.ours.normalized),
                ]
            })
            .collect();
        let mut out = super::table::markdown(&header, &rows);
        out.push('\n');
        out.push_str(&self.summary());
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,random,human,dqn,ours,dqn_norm,ours_norm,better\n");
        for l in &self.lines {
            out.push_str(&format!(
                "{},{},{},{},{},{:.1},{:.1},{}\n",
                super::table::csv_field(&l.dqn.name),
                l.dqn.random,
                l.dqn.human,
                l.dqn.raw,
                l.ours.raw,
                round1(l.dqn.normalized),
                round1(l.ours.normalized),
                l.better.map_or("tie", Agent::label),
            ));
        }
        for line in self.summary().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "games: {}\nDQN >= {HUMAN_LEVEL}%: {}\nOurs >= {HUMAN_LEVEL}%: {}\nOurs higher: {}\nDQN higher: {}\n",
            self.lines.len(),
            self.dqn_human_level,
            self.ours_human_level,
            self.ours_better,
            self.dqn_better
        );
        for m in &self.mismatches {
            s.push_str(&format!(
                "mismatch: {} {} printed {:.1}% computed {:.2}%\n",
                m.name,
                m.agent.label(),
                m.printed,
                m.computed
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped() -> Vec<GameScores> {
        read_scores(APPENDIX_SCORES.as_bytes()).unwrap()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(round1(normalize_score(401.2, 1.7, 31.8).unwrap()), 1327.2);
        assert_eq!(normalize_score(5.0, 5.0, 10.0).unwrap(), 0.0);
        assert_eq!(normalize_score(10.0, 5.0, 10.0).unwrap(), 100.0);
        assert_eq!(normalize_score(0.0, 0.0, 4367.0).unwrap(), 0.0);
        assert!(matches!(normalize_score(1.0, 3.0, 3.0), Err(Error::DegenerateScale(_))));
    }

    #[test]
    fn shipped_table_counts() {
        let games = shipped();
        assert_eq!(games.len(), 49);
        let report = score_report(&games).unwrap();
        assert_eq!(report.dqn_human_level, 29);
        assert_eq!(report.ours_human_level, 33);
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    }

    #[test]
    fn transposed_digit_is_flagged() {
        let mut games = shipped();
        let rr = games.iter_mut().find(|g| g.name == "River Raid").unwrap();
        rr.dqn = 8136.0;
        let report = score_report(&games).unwrap();
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.mismatches[0].name, "River Raid");
        assert_eq!(report.mismatches[0].agent, Agent::Dqn);
    }

    #[test]
    fn empty_input() {
        let report = score_report(&[]).unwrap();
        assert!(report.lines.is_empty());
        assert_eq!((report.dqn_human_level, report.ours_human_level), (0, 0));
    }

    #[test]
    fn minimal_header_accepted() {
        let games = read_scores("name,random,human,dqn,ours\nPong,-20.7,9.3,18.9,20.9\n".as_bytes()).unwrap();
        assert_eq!(games[0].dqn_norm, None);
        let report = score_report(&games).unwrap();
        assert_eq!(report.lines[0].better, Some(Agent::Ours));
        assert!(read_scores("name,random,human\nx,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn ties_not_marked() {
        let games = read_scores("name,random,human,dqn,ours\nG,0,10,5,5\n".as_bytes()).unwrap();
        let report = score_report(&games).unwrap();
        assert_eq!(report.lines[0].better, None);
        assert!(!report.to_markdown().contains("**"));
    }
}
