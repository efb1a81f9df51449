use super::{Prediction, TrainError};
use crate::corpus::Label;

/// Combines the predictions of several runs on the same samples.
///
/// Each sample gets the majority class of the members. A split vote goes to
/// the class with the higher mean probability across members, and an exact
/// tie to [`Label::Literal`]. The output probabilities are the member means.
pub fn ensemble_predict(members: &[Vec<Prediction>]) -> Result<Vec<Prediction>, TrainError> {
    if members.len() < 2 {
        return Err(TrainError::Ensemble(format!("need at least 2 members, got {}", members.len())));
    }
    let first = &members[0];
    for (m, preds) in members.iter().enumerate().skip(1) {
        if preds.len() != first.len() {
            return Err(TrainError::Ensemble(format!(
                "member {m} has {} predictions, member 0 has {}",
                preds.len(),
                first.len()
            )));
        }
        if let Some((i, p)) = preds.iter().enumerate().find(|(i, p)| p.id != first[*i].id) {
            return Err(TrainError::Ensemble(format!(
                "member {m} sample {i} is {:?}, member 0 has {:?}",
                p.id, first[i].id
            )));
        }
    }
    let n = members.len() as f64;
    Ok((0..first.len())
        .map(|i| {
            let mut votes = [0usize; 2];
            let mut probs = [0.0; 2];
            for preds in members {
                let p = &preds[i];
                votes[p.label.index()] += 1;
                probs[0] += p.probs[0];
                probs[1] += p.probs[1];
            }
            probs = [probs[0] / n, probs[1] / n];
            let (lit, met) = (Label::Literal.index(), Label::Metonymic.index());
            let label = if votes[met] > votes[lit] || (votes[met] == votes[lit] && probs[met] > probs[lit]) {
                Label::Metonymic
            } else {
                Label::Literal
            };
            Prediction {
                id: first[i].id.clone(),
                label,
                probs,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: &str, label: Label, met: f64) -> Prediction {
        Prediction {
            id: id.into(),
            label,
            probs: [1.0 - met, met],
        }
    }

    #[test]
    fn majority_wins() {
        let m = Label::Metonymic;
        let l = Label::Literal;
        let out = ensemble_predict(&[vec![p("a", m, 0.9)], vec![p("a", m, 0.6)], vec![p("a", l, 0.01)]]).unwrap();
        assert_eq!(out[0].label, m);
    }

    #[test]
    fn split_vote_uses_mean_probability() {
        // Member one says metonymic at 0.6, member two literal at 0.55.
        let out = ensemble_predict(&[vec![p("a", Label::Metonymic, 0.6)], vec![p("a", Label::Literal, 0.45)]]).unwrap();
        assert_eq!(out[0].label, Label::Metonymic);
        assert!((out[0].probs[1] - 0.525).abs() < 1e-15);
        let even = ensemble_predict(&[vec![p("a", Label::Metonymic, 0.6)], vec![p("a", Label::Literal, 0.4)]]).unwrap();
        assert_eq!(even[0].label, Label::Literal);
    }

    #[test]
    fn identical_members_reproduce_the_member() {
        let member = vec![p("a", Label::Metonymic, 0.7), p("b", Label::Literal, 0.2)];
        let out = ensemble_predict(&[member.clone(), member.clone(), member.clone()]).unwrap();
        for (o, m) in out.iter().zip(&member) {
            assert_eq!(o.label, m.label);
            assert_eq!(o.id, m.id);
        }
    }

    #[test]
    fn rejects_bad_membership() {
        let a = vec![p("a", Label::Literal, 0.1)];
        let b = vec![p("b", Label::Literal, 0.1)];
        assert!(ensemble_predict(&[a.clone()]).is_err());
        assert!(ensemble_predict(&[a.clone(), b]).is_err());
        assert!(ensemble_predict(&[a.clone(), vec![]]).is_err());
    }
}
