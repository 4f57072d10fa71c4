pub mod estimate;
pub mod fit;
pub mod plot;
pub mod powergrid;
pub mod simulate;

use clap::ValueEnum;
use ctau_core::meta::{ModelFamily, SubsetRule};
use ctau_core::survival::{Estimator, UnoVariant};
use ctau_core::transforms::Transform;

#[derive(Clone, Copy, ValueEnum)]
pub enum EstimatorArg {
    Rf,
    Harrell,
    Uno,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum UnoVariantArg {
    Squared,
    Gerds,
}

impl EstimatorArg {
    pub fn to_core(self, variant: UnoVariantArg) -> Estimator {
        match self {
            EstimatorArg::Rf => Estimator::RelativeFrequency,
            EstimatorArg::Harrell => Estimator::Harrell,
            EstimatorArg::Uno => Estimator::Uno(match variant {
                UnoVariantArg::Squared => UnoVariant::Squared,
                UnoVariantArg::Gerds => UnoVariant::GerdsLeftLimit,
            }),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TransformArg {
    Id,
    Logit,
    Asin,
}

impl TransformArg {
    pub fn to_core(self) -> Transform {
        match self {
            TransformArg::Id => Transform::Identity,
            TransformArg::Logit => Transform::Logit,
            TransformArg::Asin => Transform::ArcsineSqrt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Ma,
    Linear,
    Rcs,
    Fp2,
    Expdecay,
}

impl FamilyArg {
    pub fn to_core(self) -> ModelFamily {
        match self {
            FamilyArg::Ma => ModelFamily::MetaAnalysis,
            FamilyArg::Linear => ModelFamily::Linear,
            FamilyArg::Rcs => ModelFamily::Rcs,
            FamilyArg::Fp2 => ModelFamily::Fp2,
            FamilyArg::Expdecay => ModelFamily::ExpDecay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SubsetArg {
    All,
    Last50,
    Last30,
}

impl SubsetArg {
    pub fn to_core(self) -> SubsetRule {
        match self {
            SubsetArg::All => SubsetRule::All,
            SubsetArg::Last50 => SubsetRule::Last50,
            SubsetArg::Last30 => SubsetRule::Last30,
        }
    }
}
