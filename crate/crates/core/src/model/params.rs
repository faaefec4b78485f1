use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::{Error, Result};

/// A named parameter block with its gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    /// Embedding-style blocks record which rows received gradient so the
    /// optimizer and the zeroing pass only visit those.
    sparse: bool,
    touched: Vec<usize>,
    marked: Vec<bool>,
}

impl Block {
    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    /// Rows with gradient since the last `zero_grad` (all rows if dense).
    pub fn active_rows(&self) -> Vec<usize> {
        if self.sparse {
            self.touched.clone()
        } else {
            (0..self.value.rows()).collect()
        }
    }

    /// Mutable gradient row, marking it touched.
    pub fn grad_row(&mut self, r: usize) -> &mut [f64] {
        if self.sparse && !self.marked[r] {
            self.marked[r] = true;
            self.touched.push(r);
        }
        self.grad.row_mut(r)
    }

    pub fn zero_grad(&mut self) {
        if self.sparse {
            for &r in &self.touched {
                self.grad.row_mut(r).fill(0.0);
                self.marked[r] = false;
            }
            self.touched.clear();
        } else {
            self.grad.as_mut_slice().fill(0.0);
        }
    }
}

/// Index of a block inside a [`ParamStore`].
pub type BlockId = usize;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub sparse: bool,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix, sparse: bool) -> BlockId {
        let (r, c) = value.shape();
        self.blocks.push(Block {
            name: name.into(),
            value,
            grad: Matrix::zeros(r, c),
            sparse,
            touched: Vec::new(),
            marked: if sparse { vec![false; r] } else { Vec::new() },
        });
        self.blocks.len() - 1
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    #[inline]
    pub fn value(&self, id: BlockId) -> &Matrix {
        &self.blocks[id].value
    }

    #[inline]
    pub fn value_mut(&mut self, id: BlockId) -> &mut Matrix {
        &mut self.blocks[id].value
    }

    #[inline]
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }

    #[inline]
    pub fn block_mut(&mut self, id: BlockId) -> &mut Block {
        &mut self.blocks[id]
    }

    pub fn find(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn zero_grad(&mut self) {
        for b in &mut self.blocks {
            b.zero_grad();
        }
    }

    pub fn info(&self) -> Vec<BlockInfo> {
        self.blocks
            .iter()
            .map(|b| BlockInfo {
                name: b.name.clone(),
                rows: b.value.rows(),
                cols: b.value.cols(),
                sparse: b.sparse,
            })
            .collect()
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.value.as_slice().len()).sum()
    }

    /// All parameter values, block after block.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for b in &self.blocks {
            out.extend_from_slice(b.value.as_slice());
        }
        out
    }

    pub fn flatten_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for b in &self.blocks {
            out.extend_from_slice(b.grad.as_slice());
        }
        out
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.total_len() {
            return Err(Error::Input(format!(
                "{} values for {} parameters",
                flat.len(),
                self.total_len()
            )));
        }
        let mut at = 0;
        for b in &mut self.blocks {
            let n = b.value.as_slice().len();
            b.value.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Offset of each block within [`flatten`](Self::flatten).
    pub fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = at;
                at += b.value.as_slice().len();
                o
            })
            .collect()
    }
}
