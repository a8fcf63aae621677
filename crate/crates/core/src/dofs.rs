use crate::error::{Error, Result};

/// Global numbering of trial unknowns.
///
/// Every unknown has a raw index; constrained (homogeneous) unknowns are
/// dropped and the rest are renumbered consecutively in raw order.
#[derive(Clone, Debug)]
pub struct DofMap {
    local_dim: usize,
    /// raw indices, `local_dim` per element in local trial order
    element_dofs: Vec<usize>,
    free_index: Vec<Option<usize>>,
    num_free: usize,
}

impl DofMap {
    pub fn new(num_raw: usize, local_dim: usize, element_dofs: Vec<usize>, constrained: &[bool]) -> Result<Self> {
        if constrained.len() != num_raw {
            return Err(Error::Shape(format!("{} constraint flags for {} unknowns", constrained.len(), num_raw)));
        }
        if local_dim == 0 || element_dofs.len() % local_dim != 0 {
            return Err(Error::Shape("element dof list is not a multiple of the local dimension".into()));
        }
        if let Some(&bad) = element_dofs.iter().find(|&&i| i >= num_raw) {
            return Err(Error::IndexOutOfRange { index: bad, len: num_raw });
        }
        let mut next = 0;
        let free_index = constrained
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        Ok(DofMap { local_dim, element_dofs, free_index, num_free: next })
    }

    pub fn num_raw(&self) -> usize {
        self.free_index.len()
    }

    /// dofDPG: number of unknowns after eliminating constraints.
    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_constrained(&self) -> usize {
        self.num_raw() - self.num_free
    }

    pub fn num_elements(&self) -> usize {
        self.element_dofs.len() / self.local_dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn is_constrained(&self, raw: usize) -> bool {
        self.free_index[raw].is_none()
    }

    pub fn free_index(&self, raw: usize) -> Option<usize> {
        self.free_index[raw]
    }

    /// Raw indices of element `t` in local trial order.
    pub fn element_raw(&self, t: usize) -> &[usize] {
        &self.element_dofs[t * self.local_dim..(t + 1) * self.local_dim]
    }

    /// Free indices of element `t` in local trial order (`None` if constrained).
    pub fn element_free(&self, t: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        self.element_raw(t).iter().map(|&r| self.free_index[r])
    }

    /// Raw coefficient vector from free values; constrained entries are zero.
    pub fn expand(&self, free: &[f64]) -> Result<Vec<f64>> {
        if free.len() != self.num_free {
            return Err(Error::Shape(format!("{} values for {} free unknowns", free.len(), self.num_free)));
        }
        Ok(self.free_index.iter().map(|f| f.map_or(0.0, |i| free[i])).collect())
    }

    /// Local coefficients of element `t` from a free-unknown vector.
    pub fn gather(&self, t: usize, free: &[f64]) -> Vec<f64> {
        self.element_free(t).map(|f| f.map_or(0.0, |i| free[i])).collect()
    }
}
