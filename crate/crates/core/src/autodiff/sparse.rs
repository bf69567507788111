use crate::encode::BinaryTensor;

/// Constant binary input of shape `[groups, rows, cols]`, stored as the list
/// of set columns for every (group, row).
///
/// Convolutions on such inputs add one weight row per set bit instead of
/// multiplying through the mostly-zero dense tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseRows {
    groups: usize,
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    active: Vec<u32>,
}

impl SparseRows {
    pub fn from_fn(
        groups: usize,
        rows: usize,
        cols: usize,
        mut cell: impl FnMut(usize, usize) -> Vec<u32>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(groups * rows + 1);
        let mut active = Vec::new();
        offsets.push(0);
        for g in 0..groups {
            for r in 0..rows {
                let mut set = cell(g, r);
                set.sort_unstable();
                set.dedup();
                assert!(set.last().is_none_or(|&c| (c as usize) < cols), "column out of range");
                active.extend(set);
                offsets.push(active.len());
            }
        }
        Self {
            groups,
            rows,
            cols,
            offsets,
            active,
        }
    }

    /// One group per spine: shape `[P, T, C]`.
    pub fn voices(x: &BinaryTensor) -> Self {
        let [t, p, c] = x.shape();
        Self::from_fn(p, t, c, |voice, row| {
            x.cell(row, voice).iter().map(|&ch| ch as u32).collect()
        })
    }

    /// Whole time slices with spines flattened: shape `[1, T, P·C]`.
    pub fn time_slices(x: &BinaryTensor) -> Self {
        let [t, p, c] = x.shape();
        Self::from_fn(1, t, p * c, |_, row| {
            (0..p)
                .flat_map(|voice| x.cell(row, voice).iter().map(move |&ch| (voice * c) as u32 + ch as u32))
                .collect()
        })
    }

    /// Pitch channels only: shape `[T, P, N]`.
    pub fn pitch_planes(x: &BinaryTensor, n_pitches: usize) -> Self {
        let [t, p, _] = x.shape();
        Self::from_fn(t, p, n_pitches, |row, voice| {
            x.cell(row, voice)
                .iter()
                .take_while(|&&ch| (ch as usize) < n_pitches)
                .map(|&ch| ch as u32)
                .collect()
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.groups, self.rows, self.cols]
    }

    pub fn row(&self, group: usize, row: usize) -> &[u32] {
        let i = group * self.rows + row;
        &self.active[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.groups * self.rows * self.cols];
        for g in 0..self.groups {
            for r in 0..self.rows {
                for &c in self.row(g, r) {
                    out[(g * self.rows + r) * self.cols + c as usize] = 1.0;
                }
            }
        }
        out
    }
}
