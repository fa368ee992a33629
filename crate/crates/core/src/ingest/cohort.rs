use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::error::CohortError;
use super::records::{AsthmaStatus, PersonProfile};

/// Binary class label; `Positive` marks subjects with asthma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` / `-1` encoding.
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Self> {
        match s {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    pub profile: PersonProfile,
    pub label: Label,
}

/// Class-balanced analysis cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub members: Vec<CohortMember>,
    pub seed: u64,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.members.iter().filter(|m| m.label == label).count()
    }
}

fn eligible(p: &PersonProfile) -> bool {
    p.county_fips.is_some() && p.asthma != AsthmaStatus::Unknown
}

/// Keeps every eligible asthmatic and an equal-size seeded uniform sample
/// (without replacement) of eligible non-asthmatics. Eligible means known
/// asthma status and known county.
///
/// Members are ordered positives first, then negatives, each in input order.
pub fn balance_cohort(profiles: &[PersonProfile], seed: u64) -> Result<Cohort, CohortError> {
    let positives: Vec<&PersonProfile> = profiles
        .iter()
        .filter(|p| eligible(p) && p.asthma == AsthmaStatus::Yes)
        .collect();
    let negatives: Vec<&PersonProfile> = profiles
        .iter()
        .filter(|p| eligible(p) && p.asthma == AsthmaStatus::No)
        .collect();
    if positives.is_empty() {
        return Err(CohortError::NoPositives);
    }
    if negatives.len() < positives.len() {
        return Err(CohortError::InsufficientNegatives {
            positives: positives.len(),
            negatives: negatives.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, negatives.len(), positives.len()).into_vec();
    picked.sort_unstable();

    let members = positives
        .iter()
        .map(|p| CohortMember {
            profile: (*p).clone(),
            label: Label::Positive,
        })
        .chain(picked.into_iter().map(|i| CohortMember {
            profile: negatives[i].clone(),
            label: Label::Negative,
        }))
        .collect();
    Ok(Cohort { members, seed })
}
