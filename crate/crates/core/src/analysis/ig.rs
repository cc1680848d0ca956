use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{IgRecord, QuestionFormat, QuestionType, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bayes,
    Entropy,
}

impl Metric {
    pub const BOTH: [Metric; 2] = [Metric::Bayes, Metric::Entropy];

    pub fn of(self, record: &IgRecord) -> f64 {
        match self {
            Metric::Bayes => record.bayes_ig,
            Metric::Entropy => record.entropy_ig,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Bayes => "Bayesian IG",
            Metric::Entropy => "Entropy IG",
        }
    }
}

/// One turn with its type, format and both IG values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnIg {
    pub game_id: String,
    pub t: u32,
    pub q_type: QuestionType,
    pub q_format: QuestionFormat,
    pub bayes: f64,
    pub entropy: f64,
}

impl TurnIg {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Bayes => self.bayes,
            Metric::Entropy => self.entropy,
        }
    }
}

fn index_records(records: &[IgRecord]) -> HashMap<(&str, u32), &IgRecord> {
    records
        .iter()
        .map(|r| ((r.game_id.as_str(), r.t), r))
        .collect()
}

/// Pairs every turn with its IG record. Every turn must have one.
pub fn join_turns(
    transcripts: &[Transcript],
    records: &[IgRecord],
) -> Result<Vec<TurnIg>, AnalysisError> {
    let by_key = index_records(records);
    let mut out = Vec::new();
    for tr in transcripts {
        for turn in &tr.turns {
            let r = by_key.get(&(tr.game_id.as_str(), turn.t)).ok_or_else(|| {
                AnalysisError::MissingIg {
                    game_id: tr.game_id.clone(),
                    t: turn.t,
                }
            })?;
            out.push(TurnIg {
                game_id: tr.game_id.clone(),
                t: turn.t,
                q_type: turn.q_type,
                q_format: turn.q_format,
                bayes: r.bayes_ig,
                entropy: r.entropy_ig,
            });
        }
    }
    Ok(out)
}

/// Per-game quantities for the correlation and survival analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameIg {
    pub game_id: String,
    pub turns: u32,
    pub success: bool,
    pub mean_bayes: f64,
    pub mean_entropy: f64,
}

impl GameIg {
    pub fn mean(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Bayes => self.mean_bayes,
            Metric::Entropy => self.mean_entropy,
        }
    }
}

/// Mean IG per game. Games without turns are left out.
pub fn per_game(
    transcripts: &[Transcript],
    records: &[IgRecord],
) -> Result<Vec<GameIg>, AnalysisError> {
    let turns = join_turns(transcripts, records)?;
    let mut sums: HashMap<&str, (f64, f64, usize)> = HashMap::new();
    for t in &turns {
        let e = sums.entry(t.game_id.as_str()).or_default();
        e.0 += t.bayes;
        e.1 += t.entropy;
        e.2 += 1;
    }
    Ok(transcripts
        .iter()
        .filter_map(|tr| {
            let (b, e, n) = sums.get(tr.game_id.as_str())?;
            Some(GameIg {
                game_id: tr.game_id.clone(),
                turns: tr.turn_count,
                success: tr.is_success(),
                mean_bayes: b / *n as f64,
                mean_entropy: e / *n as f64,
            })
        })
        .collect())
}

/// Row label of the IG-by-type table: five type rows, then Open and Closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IgGroup {
    Type(QuestionType),
    Format(QuestionFormat),
}

impl IgGroup {
    pub fn label(&self) -> String {
        match self {
            IgGroup::Type(t) => t.to_string(),
            IgGroup::Format(QuestionFormat::Open) => "Open-Ended".into(),
            IgGroup::Format(QuestionFormat::Closed) => "Closed-Ended".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgRow {
    pub group: IgGroup,
    pub count: usize,
    /// Share of all questions, in [0, 1].
    pub ratio: f64,
    /// `(mean(group) - mean(all)) / sd(all)` per metric; absent for an empty group.
    pub sigma: BTreeMap<Metric, Option<f64>>,
}

/// Group means in units of the overall population standard deviation.
/// With zero overall spread every deviation is 0.
pub fn ig_by_type(turns: &[TurnIg]) -> Result<Vec<IgRow>, AnalysisError> {
    if turns.len() < 2 {
        return Err(AnalysisError::TooFew {
            needed: 2,
            got: turns.len(),
        });
    }
    let n = turns.len() as f64;
    let mut overall = BTreeMap::new();
    for m in Metric::BOTH {
        let mean = turns.iter().map(|t| t.value(m)).sum::<f64>() / n;
        let sd = (turns
            .iter()
            .map(|t| (t.value(m) - mean).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        overall.insert(m, (mean, sd));
    }
    let groups = QuestionType::ALL.iter().map(|t| IgGroup::Type(*t)).chain([
        IgGroup::Format(QuestionFormat::Open),
        IgGroup::Format(QuestionFormat::Closed),
    ]);
    Ok(groups
        .map(|g| {
            let members: Vec<&TurnIg> = turns
                .iter()
                .filter(|t| match g {
                    IgGroup::Type(q) => t.q_type == q,
                    IgGroup::Format(f) => t.q_format == f,
                })
                .collect();
            let sigma = Metric::BOTH
                .iter()
                .map(|&m| {
                    let (mean, sd) = overall[&m];
                    let v = (!members.is_empty()).then(|| {
                        if sd > 0.0 {
                            let gm = members.iter().map(|t| t.value(m)).sum::<f64>()
                                / members.len() as f64;
                            (gm - mean) / sd
                        } else {
                            0.0
                        }
                    });
                    (m, v)
                })
                .collect();
            IgRow {
                group: g,
                count: members.len(),
                ratio: members.len() as f64 / n,
                sigma,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(q_type: QuestionType, q_format: QuestionFormat, v: f64) -> TurnIg {
        TurnIg {
            game_id: "g".into(),
            t: 1,
            q_type,
            q_format,
            bayes: v,
            entropy: v,
        }
    }

    fn sigma(rows: &[IgRow], g: IgGroup) -> Option<f64> {
        rows.iter().find(|r| r.group == g).unwrap().sigma[&Metric::Bayes]
    }

    #[test]
    fn two_groups_are_one_sd_apart() {
        use QuestionFormat::*;
        use QuestionType::*;
        let turns = [
            turn(Attribute, Open, 1.0),
            turn(Attribute, Open, 1.0),
            turn(Function, Closed, 3.0),
            turn(Function, Closed, 3.0),
        ];
        let rows = ig_by_type(&turns).unwrap();
        assert_eq!(sigma(&rows, IgGroup::Type(Attribute)), Some(-1.0));
        assert_eq!(sigma(&rows, IgGroup::Type(Function)), Some(1.0));
        assert_eq!(sigma(&rows, IgGroup::Type(Location)), None);
        assert_eq!(sigma(&rows, IgGroup::Format(Open)), Some(-1.0));
        assert_eq!(rows.len(), 7);
    }

    #[test]
    fn equal_values_give_zero() {
        let turns = [
            turn(QuestionType::Attribute, QuestionFormat::Open, 0.4),
            turn(QuestionType::Direct, QuestionFormat::Closed, 0.4),
        ];
        let rows = ig_by_type(&turns).unwrap();
        for r in rows.iter().filter(|r| r.count > 0) {
            assert_eq!(r.sigma[&Metric::Bayes], Some(0.0));
        }
        assert!(ig_by_type(&turns[..1]).is_err());
    }
}
