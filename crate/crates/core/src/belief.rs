//! Open-world belief tracking over concepts.
//!
//! A game starts from an empty belief; each Interpreter turn contributes soft
//! evidence that multiplies a concept's mass by `exp(alpha * r)` (fresh
//! concepts enter with weight `exp(alpha * r)`), every weight is floored at
//! `epsilon` and the result is renormalized. The per-turn information gain is
//! the KL divergence of the new belief from the previous one.
//!
//! Arithmetic runs in the log domain and uses `libm` so that traces are
//! bit-reproducible across platforms.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{ConceptScore, GameConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub prune_fraction: f64,
    pub seed_uniform_first_turn: bool,
}

impl Default for BeliefParams {
    fn default() -> Self {
        BeliefParams {
            alpha: 1.0,
            epsilon: 1e-12,
            prune_fraction: 0.35,
            seed_uniform_first_turn: false,
        }
    }
}

impl From<&GameConfig> for BeliefParams {
    fn from(config: &GameConfig) -> Self {
        BeliefParams {
            alpha: config.interpreter_alpha,
            epsilon: config.epsilon,
            prune_fraction: config.prune_fraction,
            seed_uniform_first_turn: config.seed_uniform_first_turn,
        }
    }
}

/// A normalized distribution over concept strings. Empty only before the
/// first update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    mass: BTreeMap<String, f64>,
    params: BeliefParams,
}

/// Result of scoring one turn.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefStep {
    pub posterior: BeliefState,
    /// KL(posterior || prior) in nats.
    pub ig: f64,
    /// Support size after the update but before pruning.
    pub support_unpruned: usize,
}

impl BeliefState {
    pub fn empty(params: BeliefParams) -> Self {
        BeliefState {
            mass: BTreeMap::new(),
            params,
        }
    }

    /// Builds a belief from explicit masses, normalizing them. Non-positive
    /// or non-finite masses are dropped.
    pub fn from_masses<I, S>(masses: I, params: BeliefParams) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut mass: BTreeMap<String, f64> = masses
            .into_iter()
            .filter(|(_, m)| m.is_finite() && *m > 0.0)
            .map(|(c, m)| (c.into(), m))
            .collect();
        let total: f64 = mass.values().sum();
        for m in mass.values_mut() {
            *m /= total;
        }
        BeliefState { mass, params }
    }

    pub fn params(&self) -> &BeliefParams {
        &self.params
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn get(&self, concept: &str) -> Option<f64> {
        self.mass.get(concept).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.mass.iter().map(|(c, m)| (c.as_str(), *m))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    /// The `k` heaviest concepts, descending by mass (ties by name).
    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        let mut entries: Vec<_> = self.mass.iter().map(|(c, m)| (c.clone(), *m)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(k);
        entries
    }

    /// Log-linear soft-evidence update. Repeated concepts in `evidence` use
    /// their first score. Empty evidence leaves the belief unchanged.
    pub fn update(&self, evidence: &[ConceptScore]) -> BeliefState {
        if evidence.is_empty() {
            return self.clone();
        }
        let alpha = self.params.alpha;
        let log_floor = libm::log(self.params.epsilon);

        let mut log_weight: BTreeMap<&str, f64> = self
            .mass
            .iter()
            .map(|(c, m)| (c.as_str(), libm::log(*m)))
            .collect();
        let mut applied = BTreeSet::new();
        for item in evidence {
            if !applied.insert(item.concept.as_str()) {
                continue;
            }
            let boost = alpha * item.score;
            log_weight
                .entry(item.concept.as_str())
                .and_modify(|lw| *lw += boost)
                .or_insert(boost);
        }
        for lw in log_weight.values_mut() {
            *lw = lw.max(log_floor);
        }

        let log_norm = log_sum_exp(log_weight.values().copied());
        let mass = log_weight
            .into_iter()
            .map(|(c, lw)| (c.to_string(), libm::exp(lw - log_norm)))
            .collect();
        BeliefState {
            mass,
            params: self.params,
        }
    }

    /// Removes the lightest concepts while the cumulative removed mass stays
    /// within `prune_fraction`, always keeping the heaviest concept, then
    /// renormalizes.
    pub fn prune(&self) -> BeliefState {
        self.prune_protecting(&BTreeSet::new())
    }

    /// Like [`prune`](Self::prune) but skips over the `protected` concepts.
    pub fn prune_protecting(&self, protected: &BTreeSet<&str>) -> BeliefState {
        let budget = self.params.prune_fraction;
        if budget <= 0.0 || self.mass.len() <= 1 {
            return self.clone();
        }
        let mut ascending: Vec<(&str, f64)> =
            self.mass.iter().map(|(c, m)| (c.as_str(), *m)).collect();
        ascending.sort_by(|a, b| match a.1.total_cmp(&b.1) {
            Ordering::Equal => a.0.cmp(b.0),
            other => other,
        });
        let heaviest = ascending.last().map(|(c, _)| *c);

        let mut removed_mass = 0.0;
        let mut removed = BTreeSet::new();
        for (concept, m) in &ascending {
            if Some(*concept) == heaviest {
                break;
            }
            if protected.contains(concept) {
                continue;
            }
            // tolerate summation rounding at the boundary
            if removed_mass + m > budget + 1e-12 {
                break;
            }
            removed_mass += m;
            removed.insert(*concept);
        }
        if removed.is_empty() {
            return self.clone();
        }
        BeliefState::from_masses(
            self.mass
                .iter()
                .filter(|(c, _)| !removed.contains(c.as_str()))
                .map(|(c, m)| (c.clone(), *m)),
            self.params,
        )
    }

    /// One engine turn: update, prune (sparing this turn's evidence), and
    /// measure KL against the pre-update belief.
    pub fn score_turn(&self, evidence: &[ConceptScore]) -> BeliefStep {
        if evidence.is_empty() {
            return BeliefStep {
                posterior: self.clone(),
                ig: 0.0,
                support_unpruned: self.len(),
            };
        }
        let updated = self.update(evidence);
        let support_unpruned = updated.len();
        let fresh: BTreeSet<&str> = evidence.iter().map(|e| e.concept.as_str()).collect();
        let posterior = updated.prune_protecting(&fresh);

        let ig = if self.is_empty() && self.params.seed_uniform_first_turn {
            let uniform = BeliefState::from_masses(fresh.iter().map(|c| (*c, 1.0)), self.params);
            kl_ig(&uniform, &posterior)
        } else {
            kl_ig(self, &posterior)
        };
        BeliefStep {
            posterior,
            ig,
            support_unpruned,
        }
    }
}

/// KL(posterior || prior) in nats over the posterior's support, with the
/// prior floored at `epsilon`. Rounding noise below zero is clamped.
pub fn kl_ig(prior: &BeliefState, posterior: &BeliefState) -> f64 {
    let eps = prior.params.epsilon;
    let total: f64 = posterior
        .mass
        .iter()
        .map(|(c, &p)| {
            let q = prior.mass.get(c).copied().unwrap_or(0.0).max(eps);
            p * libm::log(p / q)
        })
        .sum();
    total.max(0.0)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.map(|v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(prune: f64) -> BeliefParams {
        BeliefParams {
            prune_fraction: prune,
            ..BeliefParams::default()
        }
    }

    fn ev(items: &[(&str, f64)]) -> Vec<ConceptScore> {
        items
            .iter()
            .map(|(c, s)| ConceptScore::new(*c, *s))
            .collect()
    }

    #[test]
    fn update_boosts_supported_concept() {
        let prior = BeliefState::from_masses([("metal", 0.5), ("plastic", 0.5)], params(0.0));
        let post = prior.update(&ev(&[("metal", 0.9)]));
        // 0.5 e^0.9 / (0.5 e^0.9 + 0.5)
        assert!((post.get("metal").unwrap() - 0.710_949_502_625_003_96).abs() < 1e-14);
        assert!((post.get("plastic").unwrap() - 0.289_050_497_374_996_04).abs() < 1e-14);
    }

    #[test]
    fn update_from_empty_and_fixed_point() {
        let empty = BeliefState::empty(params(0.0));
        let post = empty.update(&ev(&[("metal", 0.9)]));
        assert_eq!(post.get("metal"), Some(1.0));
        let again = post.update(&ev(&[("metal", 0.9)]));
        assert_eq!(again.get("metal"), Some(1.0));
    }

    #[test]
    fn empty_evidence_is_identity() {
        let prior = BeliefState::from_masses([("a", 0.2), ("b", 0.8)], params(0.35));
        assert_eq!(prior.update(&[]), prior);
        let step = prior.score_turn(&[]);
        assert_eq!(step.posterior, prior);
        assert_eq!(step.ig, 0.0);
    }

    #[test]
    fn prune_removes_bottom_mass_cumulatively() {
        let b = BeliefState::from_masses([("a", 0.6), ("b", 0.3), ("c", 0.1)], params(0.35));
        let pruned = b.prune();
        assert_eq!(pruned.len(), 2);
        assert!(pruned.get("c").is_none());
        assert!((pruned.get("a").unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((pruned.get("b").unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn prune_zero_is_identity_and_keeps_top() {
        let b = BeliefState::from_masses([("a", 0.6), ("b", 0.3), ("c", 0.1)], params(0.0));
        assert_eq!(b.prune(), b);

        let b = BeliefState::from_masses([("a", 0.5), ("b", 0.5)], params(0.99));
        let pruned = b.prune();
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.iter().next().unwrap().1, 1.0);
    }

    #[test]
    fn prune_matches_subset_brute_force() {
        // The kept set is the largest bottom-prefix whose mass fits the budget;
        // check against enumerating every prefix of the sorted order.
        let masses = [
            ("a", 0.05),
            ("b", 0.07),
            ("c", 0.11),
            ("d", 0.2),
            ("e", 0.57),
        ];
        for budget in [0.0, 0.04, 0.05, 0.12, 0.2, 0.23, 0.35, 0.43, 0.9] {
            let b = BeliefState::from_masses(masses, params(budget));
            let mut best = 0;
            for k in 0..masses.len() {
                let removed: f64 = masses[..k].iter().map(|m| m.1).sum();
                if removed <= budget + 1e-15 {
                    best = k;
                }
            }
            assert_eq!(b.prune().len(), masses.len() - best, "budget {budget}");
        }
    }

    #[test]
    fn kl_worked_values() {
        let p = BeliefState::from_masses([("a", 0.5), ("b", 0.5)], params(0.0));
        assert_eq!(kl_ig(&p, &p), 0.0);

        let prior = BeliefState::from_masses([("metal", 0.5), ("plastic", 0.5)], params(0.0));
        let post = prior.update(&ev(&[("metal", 0.9)]));
        let kl = kl_ig(&prior, &post);
        // mpmath, 40 digits
        assert!((kl - 0.091_847_858_190_361_05).abs() < 1e-14, "{kl}");

        let empty = BeliefState::empty(params(0.0));
        let post = empty.update(&ev(&[("metal", 0.9)]));
        assert!((kl_ig(&empty, &post) - 27.631_021_115_928_548).abs() < 1e-9);
    }

    #[test]
    fn worked_example_keeps_all_three() {
        let empty = BeliefState::empty(BeliefParams::default());
        let step = empty.score_turn(&ev(&[("metal", 0.9), ("steel", 0.7), ("aluminum", 0.6)]));
        let z = 0.9f64.exp() + 0.7f64.exp() + 0.6f64.exp();
        assert_eq!(step.posterior.len(), 3);
        for (c, r) in [("metal", 0.9f64), ("steel", 0.7), ("aluminum", 0.6)] {
            let want = r.exp() / z;
            let got = step.posterior.get(c).unwrap();
            assert!(((got - want) / want).abs() < 1e-12);
        }
        let top: Vec<_> = step
            .posterior
            .top_k(3)
            .into_iter()
            .map(|(c, _)| c)
            .collect();
        assert_eq!(top, ["metal", "steel", "aluminum"]);
    }

    #[test]
    fn repeated_evidence_gain_shrinks() {
        let mut belief = BeliefState::from_masses([("wood", 0.5), ("metal", 0.5)], params(0.0));
        let evidence = ev(&[("metal", 0.8)]);
        let mut gains = Vec::new();
        for _ in 0..10 {
            let step = belief.score_turn(&evidence);
            gains.push(step.ig);
            belief = step.posterior;
        }
        // Independent iteration of the closed form: mass_t(metal) = e^{0.8 t}/(1 + e^{0.8 t}).
        for (t, g) in gains.iter().enumerate() {
            let p = |k: f64| (0.8 * k).exp() / (1.0 + (0.8 * k).exp());
            let (q1, p1) = (p(t as f64), p(t as f64 + 1.0));
            let want = p1 * (p1 / q1).ln() + (1.0 - p1) * ((1.0 - p1) / (1.0 - q1)).ln();
            assert!((g - want).abs() < 1e-12, "turn {t}: {g} vs {want}");
        }
        assert!(gains.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn uniform_first_turn_seed() {
        let p = BeliefParams {
            seed_uniform_first_turn: true,
            ..params(0.0)
        };
        let step = BeliefState::empty(p).score_turn(&ev(&[("a", 0.9), ("b", 0.1)]));
        assert!(step.ig < 1.0);
        let literal = BeliefState::empty(params(0.0)).score_turn(&ev(&[("a", 0.9), ("b", 0.1)]));
        assert!(literal.ig > 20.0);
    }

    fn distribution() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.001f64..1.0, 1..12)
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_on_self(p in distribution(), q in distribution()) {
            let names = |v: &[f64]| v.iter().enumerate().map(|(i, m)| (format!("c{i}"), *m)).collect::<Vec<_>>();
            let a = BeliefState::from_masses(names(&p), params(0.0));
            let b = BeliefState::from_masses(names(&q), params(0.0));
            prop_assert_eq!(kl_ig(&a, &a), 0.0);
            prop_assert!(kl_ig(&a, &b) >= 0.0);
        }

        #[test]
        fn update_stays_normalized(
            p in distribution(),
            scores in prop::collection::vec((0usize..16, 0.001f64..=1.0), 0..8),
            alpha in 0.1f64..3.0,
            prune in 0.0f64..0.9,
        ) {
            let prm = BeliefParams { alpha, prune_fraction: prune, ..BeliefParams::default() };
            let prior = BeliefState::from_masses(
                p.iter().enumerate().map(|(i, m)| (format!("c{i}"), *m)), prm);
            let evidence: Vec<_> = scores.iter().map(|(i, s)| ConceptScore::new(format!("c{i}"), *s)).collect();
            let step = prior.score_turn(&evidence);
            if !step.posterior.is_empty() {
                prop_assert!((step.posterior.total_mass() - 1.0).abs() <= 1e-9);
            }
            prop_assert!(step.posterior.iter().all(|(_, m)| m > 0.0));
            prop_assert!(step.ig >= 0.0);
        }

        #[test]
        fn equal_scores_keep_uniform(n in 1usize..10, r in 0.001f64..1.0) {
            let prior = BeliefState::from_masses((0..n).map(|i| (format!("c{i}"), 1.0)), params(0.0));
            let evidence: Vec<_> = (0..n).map(|i| ConceptScore::new(format!("c{i}"), r)).collect();
            let post = prior.update(&evidence);
            for (_, m) in post.iter() {
                prop_assert!((m - 1.0 / n as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn stronger_evidence_never_lowers_mass(
            p in distribution(),
            r in 0.001f64..0.99,
            bump in 0.0f64..0.5,
        ) {
            let prior = BeliefState::from_masses(
                p.iter().enumerate().map(|(i, m)| (format!("c{i}"), *m)), params(0.0));
            let low = prior.update(&[ConceptScore::new("c0", r), ConceptScore::new("x", 0.5)]);
            let high = prior.update(&[ConceptScore::new("c0", (r + bump).min(1.0)), ConceptScore::new("x", 0.5)]);
            prop_assert!(high.get("c0").unwrap() >= low.get("c0").unwrap() - 1e-15);
        }
    }
}
