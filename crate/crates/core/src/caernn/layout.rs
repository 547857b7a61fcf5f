use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network dimensions. Output frames have `input_dim` components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub embedding_dim: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_dim: crate::frontend::NUM_CEPS,
            hidden: 400,
            layers: 3,
            embedding_dim: 130,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.layers == 0 || self.embedding_dim == 0 {
            return Err(Error::invalid(format!("all architecture dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of one GRU layer's contiguous block: input weights (3H x I),
/// recurrent weights (3H x H) and bias (3H), gate rows ordered reset,
/// update, candidate.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GruBlock {
    pub start: usize,
    pub input: usize,
    pub hidden: usize,
}

impl GruBlock {
    pub fn w_in_len(&self) -> usize {
        3 * self.hidden * self.input
    }
    pub fn w_hid_len(&self) -> usize {
        3 * self.hidden * self.hidden
    }
    pub fn len(&self) -> usize {
        self.w_in_len() + self.w_hid_len() + 3 * self.hidden
    }
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LinearBlock {
    pub start: usize,
    pub input: usize,
    pub output: usize,
}

impl LinearBlock {
    pub fn len(&self) -> usize {
        self.output * (self.input + 1)
    }
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

/// Where every parameter lives in the flat parameter vector.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub encoder: Vec<GruBlock>,
    pub embed: LinearBlock,
    pub decoder: Vec<GruBlock>,
    pub output: LinearBlock,
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

struct Builder {
    tensors: Vec<TensorSpec>,
    offset: usize,
}

impl Builder {
    fn push(&mut self, name: String, rows: usize, cols: usize) -> usize {
        let start = self.offset;
        self.tensors.push(TensorSpec { name, rows, cols, offset: start });
        self.offset += rows * cols;
        start
    }

    fn gru_stack(&mut self, prefix: &str, first_input: usize, hidden: usize, layers: usize) -> Vec<GruBlock> {
        (0..layers)
            .map(|l| {
                let input = if l == 0 { first_input } else { hidden };
                let start = self.push(format!("{prefix}.{l}.w_input"), 3 * hidden, input);
                self.push(format!("{prefix}.{l}.w_hidden"), 3 * hidden, hidden);
                self.push(format!("{prefix}.{l}.bias"), 3 * hidden, 1);
                GruBlock { start, input, hidden }
            })
            .collect()
    }

    fn linear(&mut self, prefix: &str, input: usize, output: usize) -> LinearBlock {
        let start = self.push(format!("{prefix}.weight"), output, input);
        self.push(format!("{prefix}.bias"), output, 1);
        LinearBlock { start, input, output }
    }
}

impl Layout {
    pub fn new(arch: &Architecture) -> Self {
        let mut b = Builder { tensors: Vec::new(), offset: 0 };
        let h = arch.hidden;
        let encoder = b.gru_stack("encoder", arch.input_dim, h, arch.layers);
        let embed = b.linear("embed", h, arch.embedding_dim);
        let decoder = b.gru_stack("decoder", arch.embedding_dim, h, arch.layers);
        let output = b.linear("output", h, arch.input_dim);
        Layout {
            encoder,
            embed,
            decoder,
            output,
            total: b.offset,
            tensors: b.tensors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_contiguous_and_complete() {
        let arch = Architecture { input_dim: 2, hidden: 3, layers: 2, embedding_dim: 2 };
        let l = Layout::new(&arch);
        let mut expect = 0;
        for t in &l.tensors {
            assert_eq!(t.offset, expect);
            expect += t.len();
        }
        assert_eq!(expect, l.total);
        // 2 GRU layers per stack: (9x2 + 9x3 + 9) + (9x3 + 9x3 + 9); embed 2x3+2; output 2x3+2
        let enc = (18 + 27 + 9) + (27 + 27 + 9);
        assert_eq!(l.total, enc + 8 + enc + 8);
        assert_eq!(l.encoder[1].start, 54);
    }

    #[test]
    fn default_matches_reference_sizes() {
        let a = Architecture::default();
        assert_eq!((a.input_dim, a.hidden, a.layers, a.embedding_dim), (13, 400, 3, 130));
    }
}
