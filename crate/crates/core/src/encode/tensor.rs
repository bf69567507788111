use serde::{Deserialize, Serialize};

/// Sparse binary tensor of shape `rows × spines × channels`.
///
/// Each (row, spine) cell stores the sorted list of channels set to 1, which
/// keeps score tensors small: a typical cell has two or three bits set out
/// of more than a hundred channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTensor {
    rows: usize,
    spines: usize,
    channels: usize,
    offsets: Vec<u32>,
    active: Vec<u16>,
}

impl BinaryTensor {
    pub fn zeros(rows: usize, spines: usize, channels: usize) -> Self {
        assert!(channels <= u16::MAX as usize + 1, "too many channels");
        Self {
            rows,
            spines,
            channels,
            offsets: vec![0; rows * spines + 1],
            active: Vec::new(),
        }
    }

    /// Builds a tensor from per-cell channel lists given in row-major
    /// (row, spine) order. Channel lists need not be sorted.
    pub fn from_cells<I, C>(rows: usize, spines: usize, channels: usize, cells: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = usize>,
    {
        let mut builder = Builder::new(spines, channels);
        for cell in cells {
            builder.push_cell(cell);
        }
        let out = builder.finish();
        assert_eq!(out.rows, rows, "cell count does not match shape");
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn spines(&self) -> usize {
        self.spines
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.rows, self.spines, self.channels]
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> usize {
        self.active.len()
    }

    /// Channels set at (row, spine), ascending.
    pub fn cell(&self, row: usize, spine: usize) -> &[u16] {
        let i = row * self.spines + spine;
        &self.active[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn get(&self, row: usize, spine: usize, channel: usize) -> bool {
        self.cell(row, spine)
            .binary_search(&(channel as u16))
            .is_ok()
    }

    /// True when no bit is set anywhere on the row.
    pub fn row_is_empty(&self, row: usize) -> bool {
        let start = self.offsets[row * self.spines];
        let end = self.offsets[(row + 1) * self.spines];
        start == end
    }

    /// Iterates over every set bit as (row, spine, channel).
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows * self.spines).flat_map(move |i| {
            let (row, spine) = (i / self.spines, i % self.spines);
            self.active[self.offsets[i] as usize..self.offsets[i + 1] as usize]
                .iter()
                .map(move |&c| (row, spine, c as usize))
        })
    }

    /// Dense row-major copy with entries 0.0 / 1.0.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.spines * self.channels];
        for (t, p, c) in self.iter_ones() {
            out[(t * self.spines + p) * self.channels + c] = 1.0;
        }
        out
    }

    /// Per-channel count of set bits summed over rows and spines.
    pub fn channel_counts(&self) -> Vec<u32> {
        let mut counts = vec![0; self.channels];
        for &c in &self.active {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Copies rows `[start, start + len)` (clipped to the tensor) into a
    /// builder, padding with empty rows up to `len`.
    pub(crate) fn copy_window(&self, start: usize, len: usize, builder: &mut Builder) {
        let end = (start + len).min(self.rows);
        let copied = end.saturating_sub(start);
        for row in start..start + copied {
            for spine in 0..self.spines {
                builder.push_cell(self.cell(row, spine).iter().map(|&c| c as usize));
            }
        }
        for _ in copied..len {
            builder.push_empty_row();
        }
    }

    /// Packs the tensor densely, one bit per entry, into little-endian u64 words.
    pub fn pack_bits(&self) -> Vec<u64> {
        let total = self.rows * self.spines * self.channels;
        let mut words = vec![0u64; total.div_ceil(64)];
        for (t, p, c) in self.iter_ones() {
            let bit = (t * self.spines + p) * self.channels + c;
            words[bit / 64] |= 1 << (bit % 64);
        }
        words
    }

    pub fn unpack_bits(rows: usize, spines: usize, channels: usize, words: &[u64]) -> Option<Self> {
        let total = rows * spines * channels;
        if words.len() != total.div_ceil(64) {
            return None;
        }
        let mut builder = Builder::new(spines, channels);
        for cell in 0..rows * spines {
            let base = cell * channels;
            builder.push_cell((0..channels).filter(|c| {
                let bit = base + c;
                words[bit / 64] >> (bit % 64) & 1 == 1
            }));
        }
        // Padding bits in the final word must be clear.
        if !total.is_multiple_of(64) && words[words.len() - 1] >> (total % 64) != 0 {
            return None;
        }
        Some(builder.finish())
    }
}

/// Incremental row-major constructor for [`BinaryTensor`].
pub(crate) struct Builder {
    spines: usize,
    channels: usize,
    cells: usize,
    offsets: Vec<u32>,
    active: Vec<u16>,
}

impl Builder {
    pub(crate) fn new(spines: usize, channels: usize) -> Self {
        Self {
            spines,
            channels,
            cells: 0,
            offsets: vec![0],
            active: Vec::new(),
        }
    }

    pub(crate) fn push_cell(&mut self, channels: impl IntoIterator<Item = usize>) {
        let start = self.active.len();
        for c in channels {
            assert!(c < self.channels, "channel {c} out of range");
            self.active.push(c as u16);
        }
        self.active[start..].sort_unstable();
        let mut kept = start;
        for i in start..self.active.len() {
            if kept == start || self.active[i] != self.active[kept - 1] {
                self.active[kept] = self.active[i];
                kept += 1;
            }
        }
        self.active.truncate(kept);
        self.offsets.push(self.active.len() as u32);
        self.cells += 1;
    }

    pub(crate) fn push_empty_row(&mut self) {
        for _ in 0..self.spines {
            self.offsets.push(self.active.len() as u32);
            self.cells += 1;
        }
    }

    pub(crate) fn finish(self) -> BinaryTensor {
        assert_eq!(self.cells % self.spines.max(1), 0, "incomplete row");
        BinaryTensor {
            rows: self.cells.checked_div(self.spines).unwrap_or(0),
            spines: self.spines,
            channels: self.channels,
            offsets: self.offsets,
            active: self.active,
        }
    }
}

/// Binary encoding of one whole score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreTensor {
    pub data: BinaryTensor,
    /// Composer index, when known.
    pub label: Option<usize>,
}

impl ScoreTensor {
    /// Number of time rows (T).
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }
}

/// Fixed-length `3s` view of a score: its first, middle and last `s` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledTensor {
    pub data: BinaryTensor,
    pub window: usize,
    pub source_len: usize,
}

/// Start rows of the three sub-sampling windows for a score of `len` rows.
pub fn window_starts(len: usize, window: usize) -> [usize; 3] {
    [0, len.saturating_sub(window) / 2, len.saturating_sub(window)]
}

/// Samples the first, middle and last `window` rows of a score, zero-padding
/// each window on the right when the score is shorter than `window`.
pub fn subsample(tensor: &ScoreTensor, window: usize) -> SampledTensor {
    assert!(window >= 1, "sample window must be positive");
    let data = &tensor.data;
    let mut builder = Builder::new(data.spines(), data.channels());
    for start in window_starts(data.rows(), window) {
        data.copy_window(start, window, &mut builder);
    }
    SampledTensor {
        data: builder.finish(),
        window,
        source_len: data.rows(),
    }
}
