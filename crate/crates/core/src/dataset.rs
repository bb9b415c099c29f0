//! Collections of training instances that the optimizer and the bound
//! evaluator can work with through one interface.

use std::collections::HashMap;

use crate::chain::{self, ChainInstance, ChainLayout, ChainModel};
use crate::error::{Error, Result};
use crate::losses::{self, LossSpec};
use crate::model::{argmax, argmax_excluding, FlatInstance};

/// Anything that yields a mean loss and its weight gradient for a flat
/// parameter vector. Instances are always visited in stored order, so the
/// floating-point reduction is reproducible.
pub trait TrainingSet {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dimension(&self) -> usize;

    fn mean_loss_and_gradient(&self, spec: &LossSpec, weights: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Margin of instance `index` under `weights`.
    fn margin(&self, weights: &[f64], index: usize) -> Result<f64>;

    fn margins(&self, weights: &[f64]) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| self.margin(weights, i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatDataset {
    instances: Vec<FlatInstance>,
    dimension: usize,
    label_count: usize,
}

impl FlatDataset {
    pub fn new(instances: Vec<FlatInstance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyDataset)?;
        let (dimension, label_count) = (first.dimension(), first.label_count());
        for inst in &instances {
            if inst.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    weights: dimension,
                    features: inst.dimension(),
                });
            }
            if inst.label_count() != label_count {
                return Err(Error::LengthMismatch {
                    left: label_count,
                    right: inst.label_count(),
                });
            }
        }
        Ok(Self {
            instances,
            dimension,
            label_count,
        })
    }

    pub fn instances(&self) -> &[FlatInstance] {
        &self.instances
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn predictions(&self, weights: &[f64]) -> Result<Vec<usize>> {
        self.check(weights)?;
        Ok(self
            .instances
            .iter()
            .map(|inst| argmax(&inst.scores_unchecked(weights)))
            .collect())
    }

    pub fn golds(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.gold()).collect()
    }

    fn check(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                weights: weights.len(),
                features: self.dimension,
            });
        }
        Ok(())
    }
}

impl TrainingSet for FlatDataset {
    fn len(&self) -> usize {
        self.instances.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn mean_loss_and_gradient(&self, spec: &LossSpec, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(weights)?;
        let scale = 1.0 / self.instances.len() as f64;
        let mut gradient = vec![0.0; self.dimension];
        let mut total = 0.0;
        for inst in &self.instances {
            total += losses::accumulate_flat(spec, weights, inst, scale, &mut gradient)?;
        }
        Ok((total * scale, gradient))
    }

    fn margin(&self, weights: &[f64], index: usize) -> Result<f64> {
        self.check(weights)?;
        let inst = &self.instances[index];
        let scores = inst.scores_unchecked(weights);
        Ok(scores[inst.gold()] - scores[argmax_excluding(&scores, inst.gold())])
    }
}

impl FlatDataset {
    /// Merges identical instances into one weighted instance each, in order
    /// of first appearance.
    pub fn compress(&self) -> WeightedFlatDataset {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut instances: Vec<FlatInstance> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for inst in &self.instances {
            let mut key = vec![inst.gold() as u64];
            for fv in inst.features() {
                key.push(fv.entries().len() as u64);
                for &(i, v) in fv.entries() {
                    key.push(i as u64);
                    key.push(v.to_bits());
                }
            }
            match index.get(&key) {
                Some(&j) => counts[j] += 1.0,
                None => {
                    index.insert(key, instances.len());
                    instances.push(inst.clone());
                    counts.push(1.0);
                }
            }
        }
        WeightedFlatDataset {
            data: Self {
                instances,
                dimension: self.dimension,
                label_count: self.label_count,
            },
            counts,
        }
    }
}

/// Distinct instances with non-negative multiplicities. The mean loss
/// weights each instance by its count; `len` counts distinct instances.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFlatDataset {
    data: FlatDataset,
    counts: Vec<f64>,
}

impl WeightedFlatDataset {
    pub fn new(data: FlatDataset, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != data.len() {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: counts.len(),
            });
        }
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) || counts.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("instance counts", "need finite non-negative counts with a positive total"));
        }
        Ok(Self { data, counts })
    }

    pub fn data(&self) -> &FlatDataset {
        &self.data
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total_count(&self) -> f64 {
        self.counts.iter().sum()
    }
}

impl TrainingSet for WeightedFlatDataset {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn dimension(&self) -> usize {
        self.data.dimension
    }

    fn mean_loss_and_gradient(&self, spec: &LossSpec, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.data.check(weights)?;
        let total = self.total_count();
        let mut gradient = vec![0.0; self.data.dimension];
        let mut value = 0.0;
        for (inst, &c) in self.data.instances.iter().zip(&self.counts) {
            let scale = c / total;
            value += scale * losses::accumulate_flat(spec, weights, inst, scale, &mut gradient)?;
        }
        Ok((value, gradient))
    }

    fn margin(&self, weights: &[f64], index: usize) -> Result<f64> {
        self.data.margin(weights, index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDataset {
    layout: ChainLayout,
    instances: Vec<ChainInstance>,
}

impl ChainDataset {
    pub fn new(layout: ChainLayout, instances: Vec<ChainInstance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for inst in &instances {
            if inst.feature_dimension() != layout.feature_count {
                return Err(Error::DimensionMismatch {
                    weights: layout.feature_count,
                    features: inst.feature_dimension(),
                });
            }
            if let Some(&bad) = inst.gold_tags().iter().find(|&&t| t >= layout.tag_count) {
                return Err(Error::LabelOutOfRange {
                    label: bad,
                    count: layout.tag_count,
                });
            }
        }
        Ok(Self { layout, instances })
    }

    pub fn layout(&self) -> ChainLayout {
        self.layout
    }

    pub fn instances(&self) -> &[ChainInstance] {
        &self.instances
    }

    pub fn model(&self, weights: &[f64]) -> Result<ChainModel> {
        ChainModel::from_params(self.layout, weights.to_vec())
    }

    pub fn decode(&self, weights: &[f64]) -> Result<Vec<Vec<usize>>> {
        let model = self.model(weights)?;
        self.instances
            .iter()
            .map(|inst| chain::viterbi(&model, inst).map(|(tags, _)| tags))
            .collect()
    }
}

impl TrainingSet for ChainDataset {
    fn len(&self) -> usize {
        self.instances.len()
    }

    fn dimension(&self) -> usize {
        self.layout.dimension()
    }

    fn mean_loss_and_gradient(&self, spec: &LossSpec, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        let model = self.model(weights)?;
        let scale = 1.0 / self.instances.len() as f64;
        let mut gradient = vec![0.0; self.layout.dimension()];
        let mut total = 0.0;
        for inst in &self.instances {
            total += chain::accumulate_chain(spec, &model, inst, scale, &mut gradient)?;
        }
        Ok((total * scale, gradient))
    }

    fn margin(&self, weights: &[f64], index: usize) -> Result<f64> {
        let model = self.model(weights)?;
        chain::chain_margin(&model, &self.instances[index])
    }

    fn margins(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let model = self.model(weights)?;
        self.instances
            .iter()
            .map(|inst| chain::chain_margin(&model, inst))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FlatInstance;

    fn repeated() -> FlatDataset {
        let golds = [0, 2, 0, 1, 0, 2, 2, 0];
        let instances = golds
            .iter()
            .map(|&g| FlatInstance::block_encoded(&[1.0, 1.0], 3, false, g).unwrap())
            .collect();
        FlatDataset::new(instances).unwrap()
    }

    #[test]
    fn compressed_mean_matches_full_mean() {
        let full = repeated();
        let packed = full.compress();
        assert_eq!(packed.len(), 3);
        assert_eq!(packed.counts(), &[4.0, 3.0, 1.0]);
        let w = [0.3, -0.1, 0.7, 0.2, -0.5, 0.4];
        for spec in [LossSpec::log(), LossSpec::hinge(), LossSpec::hybrid(0.4).unwrap()] {
            let (a, ga) = full.mean_loss_and_gradient(&spec, &w).unwrap();
            let (b, gb) = packed.mean_loss_and_gradient(&spec, &w).unwrap();
            assert!((a - b).abs() < 1e-14);
            for (x, y) in ga.iter().zip(&gb) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weighted_counts_are_validated() {
        let data = repeated();
        assert!(WeightedFlatDataset::new(data.clone(), vec![1.0; 3]).is_err());
        assert!(WeightedFlatDataset::new(data.clone(), vec![0.0; 8]).is_err());
        let mut counts = vec![1.0; 8];
        counts[0] = -1.0;
        assert!(WeightedFlatDataset::new(data, counts).is_err());
    }

    #[test]
    fn datasets_reject_inconsistent_instances() {
        let a = FlatInstance::block_encoded(&[1.0], 3, false, 0).unwrap();
        let b = FlatInstance::block_encoded(&[1.0, 2.0], 3, false, 0).unwrap();
        let c = FlatInstance::block_encoded(&[1.0], 2, false, 0).unwrap();
        assert!(FlatDataset::new(vec![a.clone(), b]).is_err());
        assert!(FlatDataset::new(vec![a, c]).is_err());
        assert!(matches!(FlatDataset::new(vec![]), Err(Error::EmptyDataset)));
    }
}
