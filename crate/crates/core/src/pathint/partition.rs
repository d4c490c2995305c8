use serde::Serialize;

use crate::error::{LabError, Result};

/// Nested partitions `pi_1 ⊂ pi_2 ⊂ ...` of the grid `{0, ..., steps}`, coarsest first.
/// Every level contains both endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSequence {
    steps: usize,
    levels: Vec<Vec<usize>>,
}

fn strided(steps: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..steps).step_by(stride).collect();
    v.push(steps);
    v
}

impl PartitionSequence {
    /// Dyadic levels with strides `finest_stride * 2^(levels-1)`, ..., `finest_stride`.
    pub fn dyadic(steps: usize, finest_stride: usize, levels: usize) -> Result<Self> {
        if steps == 0 || finest_stride == 0 || levels == 0 {
            return Err(LabError::InvalidPartition("steps, stride and level count must be positive".into()));
        }
        let coarsest = finest_stride
            .checked_shl((levels - 1) as u32)
            .ok_or_else(|| LabError::InvalidPartition("too many levels".into()))?;
        if coarsest > steps {
            return Err(LabError::InvalidPartition(format!(
                "coarsest stride {coarsest} exceeds the {steps} grid steps"
            )));
        }
        let levels = (0..levels).rev().map(|l| strided(steps, finest_stride << l)).collect();
        Ok(Self { steps, levels })
    }

    /// Finest stride 4 (so each cell spans several grid steps) and up to
    /// `max_levels` levels, as many as fit.
    pub fn standard(steps: usize, max_levels: usize) -> Result<Self> {
        let stride = if steps >= 8 { 4 } else { 1 };
        let mut levels = 1;
        while levels < max_levels && (stride << levels) <= steps {
            levels += 1;
        }
        Self::dyadic(steps, stride, levels)
    }

    pub fn from_levels(steps: usize, levels: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(LabError::InvalidPartition("no levels".into()));
        }
        for (i, l) in levels.iter().enumerate() {
            if l.first() != Some(&0) || l.last() != Some(&steps) {
                return Err(LabError::InvalidPartition(format!("level {i} must start at 0 and end at {steps}")));
            }
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LabError::InvalidPartition(format!("level {i} is not strictly increasing")));
            }
        }
        for c in 1..levels.len() {
            let fine = &levels[c];
            if !levels[c - 1].iter().all(|p| fine.binary_search(p).is_ok()) {
                return Err(LabError::NotNested { coarse: c - 1, fine: c });
            }
        }
        Ok(Self { steps, levels })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &[usize] {
        self.levels.last().unwrap()
    }

    /// Largest cell width of a level, in grid steps.
    pub fn mesh(&self, level: usize) -> usize {
        self.levels[level].windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Index reflection `i -> steps - i`, matching time reversal at the horizon.
    pub fn reflected(&self) -> Self {
        let levels = self.levels.iter().map(|l| l.iter().rev().map(|&i| self.steps - i).collect()).collect();
        Self { steps: self.steps, levels }
    }

    /// Cells `[a, min(b, k)]` of a level with `a < k`.
    pub fn cells(&self, level: usize, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.levels[level].windows(2).take_while(move |w| w[0] < k).map(move |w| (w[0], w[1].min(k)))
    }

    pub(crate) fn check_anchor(&self, k: usize, len: usize) -> Result<()> {
        if k > self.steps {
            return Err(LabError::IndexOutOfRange { index: k, steps: self.steps });
        }
        if len <= k {
            return Err(LabError::LengthMismatch { expected: k + 1, got: len });
        }
        Ok(())
    }
}
