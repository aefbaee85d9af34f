use crate::error::{PcgError, Result};
use crate::label::Label;

const SEVERITY_CLASSES: usize = 3;
const MILD: usize = 1;
const SEVERE: usize = 2;

/// One classifier's vote. Class indices follow severity order
/// (higher index = more severe).
#[derive(Debug, Clone, PartialEq)]
pub struct VoterOutput {
    pub voter: String,
    pub class: usize,
    pub posterior: Option<Vec<f64>>,
}

impl VoterOutput {
    pub fn hard(voter: impl Into<String>, class: usize) -> Self {
        VoterOutput {
            voter: voter.into(),
            class,
            posterior: None,
        }
    }

    pub fn soft(voter: impl Into<String>, class: usize, posterior: Vec<f64>) -> Result<Self> {
        let sum: f64 = posterior.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || posterior.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(PcgError::InvalidInput(format!("posterior must sum to 1, sums to {sum}")));
        }
        Ok(VoterOutput {
            voter: voter.into(),
            class,
            posterior: Some(posterior),
        })
    }
}

/// Plurality vote over `k` classes. Ties go to the tied class with the
/// highest mean posterior (over voters reporting one), then to the most
/// severe tied class.
pub fn majority_vote(votes: &[VoterOutput], k: usize) -> Result<usize> {
    if votes.is_empty() {
        return Err(PcgError::Parameter("majority vote needs at least one vote".into()));
    }
    let mut tally = vec![0usize; k];
    for v in votes {
        if v.class >= k || v.posterior.as_ref().is_some_and(|p| p.len() != k) {
            return Err(PcgError::InvalidInput(format!("vote from `{}` is not over {k} classes", v.voter)));
        }
        tally[v.class] += 1;
    }
    let top = *tally.iter().max().unwrap();
    let tied: Vec<usize> = (0..k).filter(|&c| tally[c] == top).collect();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    let soft: Vec<&Vec<f64>> = votes.iter().filter_map(|v| v.posterior.as_ref()).collect();
    if soft.is_empty() {
        return Ok(*tied.last().unwrap());
    }
    let mean = |c: usize| soft.iter().map(|p| p[c]).sum::<f64>() / soft.len() as f64;
    let mut best = tied[0];
    for &c in &tied[1..] {
        // later (more severe) classes win exact posterior ties
        if mean(c) >= mean(best) {
            best = c;
        }
    }
    Ok(best)
}

/// What a stage-two voter's Normal prediction turns into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalVotePolicy {
    /// Counted for its better-scoring abnormal class (Severe without scores).
    #[default]
    Redistribute,
    /// Dropped; if every voter abstains, falls back to `Redistribute`.
    Abstain,
}

fn restrict(vote: &VoterOutput) -> VoterOutput {
    let class = if vote.class == 0 {
        match &vote.posterior {
            Some(p) if p[MILD] > p[SEVERE] => MILD,
            _ => SEVERE,
        }
    } else {
        vote.class
    };
    let posterior = vote.posterior.as_ref().map(|p| {
        let s = p[MILD] + p[SEVERE];
        if s > 0.0 {
            vec![0.0, p[MILD] / s, p[SEVERE] / s]
        } else {
            vec![0.0, 0.5, 0.5]
        }
    });
    VoterOutput {
        voter: vote.voter.clone(),
        class,
        posterior,
    }
}

/// Binary gate first; only an Abnormal gate consults the severity ensemble,
/// whose answer is restricted to Mild or Severe.
pub fn hierarchical_decide(stage1: Label, stage2: Option<&[VoterOutput]>, policy: NormalVotePolicy) -> Result<Label> {
    match stage1.to_binary() {
        Label::Normal => return Ok(Label::Normal),
        Label::Abnormal => {}
        _ => unreachable!(),
    }
    let votes = match stage2 {
        Some(v) if !v.is_empty() => v,
        _ => {
            return Err(PcgError::Pipeline(
                "stage one says abnormal but no stage-two votes were given".into(),
            ))
        }
    };
    for v in votes {
        if v.class >= SEVERITY_CLASSES || v.posterior.as_ref().is_some_and(|p| p.len() != SEVERITY_CLASSES) {
            return Err(PcgError::InvalidInput(format!("stage-two vote from `{}` is not 3-class", v.voter)));
        }
    }
    let kept: Vec<&VoterOutput> = match policy {
        NormalVotePolicy::Abstain if votes.iter().any(|v| v.class != 0) => {
            votes.iter().filter(|v| v.class != 0).collect()
        }
        _ => votes.iter().collect(),
    };
    let restricted: Vec<VoterOutput> = kept.into_iter().map(restrict).collect();
    Ok(match majority_vote(&restricted, SEVERITY_CLASSES)? {
        MILD => Label::Mild,
        _ => Label::Severe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurality() {
        let v = [VoterOutput::hard("a", 0), VoterOutput::hard("b", 1), VoterOutput::hard("c", 1)];
        assert_eq!(majority_vote(&v, 3).unwrap(), 1);
    }

    #[test]
    fn three_way_tie_uses_mean_posterior() {
        let v = [
            VoterOutput::soft("a", 0, vec![0.5, 0.2, 0.3]).unwrap(),
            VoterOutput::soft("b", 1, vec![0.2, 0.5, 0.3]).unwrap(),
            VoterOutput::soft("c", 2, vec![0.2, 0.32, 0.48]).unwrap(),
        ];
        // means (0.30, 0.34, 0.36)
        assert_eq!(majority_vote(&v, 3).unwrap(), 2);
    }

    #[test]
    fn hard_tie_goes_to_most_severe() {
        let v = [VoterOutput::hard("a", 0), VoterOutput::hard("b", 1)];
        assert_eq!(majority_vote(&v, 3).unwrap(), 1);
    }

    #[test]
    fn unanimous_ignores_posteriors() {
        let v = [
            VoterOutput::soft("a", 0, vec![0.1, 0.1, 0.8]).unwrap(),
            VoterOutput::soft("b", 0, vec![0.1, 0.1, 0.8]).unwrap(),
        ];
        assert_eq!(majority_vote(&v, 3).unwrap(), 0);
    }

    #[test]
    fn empty_votes() {
        assert!(matches!(majority_vote(&[], 3), Err(PcgError::Parameter(_))));
    }

    #[test]
    fn gate_rules() {
        let severe = [VoterOutput::hard("a", 2)];
        let mild = [VoterOutput::hard("a", 1), VoterOutput::hard("b", 1), VoterOutput::hard("c", 2)];
        let p = NormalVotePolicy::Redistribute;
        assert_eq!(hierarchical_decide(Label::Normal, Some(&severe), p).unwrap(), Label::Normal);
        assert_eq!(hierarchical_decide(Label::Abnormal, Some(&mild), p).unwrap(), Label::Mild);
        assert!(matches!(hierarchical_decide(Label::Abnormal, None, p), Err(PcgError::Pipeline(_))));
    }

    #[test]
    fn normal_votes_redistributed_or_dropped() {
        let v = [
            VoterOutput::soft("a", 0, vec![0.6, 0.3, 0.1]).unwrap(),
            VoterOutput::soft("b", 0, vec![0.5, 0.4, 0.1]).unwrap(),
            VoterOutput::hard("c", 2),
        ];
        assert_eq!(
            hierarchical_decide(Label::Abnormal, Some(&v), NormalVotePolicy::Redistribute).unwrap(),
            Label::Mild
        );
        assert_eq!(
            hierarchical_decide(Label::Abnormal, Some(&v), NormalVotePolicy::Abstain).unwrap(),
            Label::Severe
        );
    }
}
