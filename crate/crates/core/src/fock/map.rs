use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mode::Mode;
use super::state::{Image, PhotonState};
use crate::error::{Error, Result};

/// Linear map on creation operators. Column `j` of `matrix` is the image of
/// `inputs[j]` expressed over `outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMap {
    inputs: Vec<Mode>,
    outputs: Vec<Mode>,
    matrix: DMatrix<Complex64>,
}

fn check_distinct(modes: &[Mode], what: &str) -> Result<()> {
    let set: BTreeSet<_> = modes.iter().collect();
    if set.len() != modes.len() {
        return Err(Error::Binding(format!("repeated {what} mode")));
    }
    Ok(())
}

impl ModeMap {
    pub fn new(inputs: Vec<Mode>, outputs: Vec<Mode>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.ncols() != inputs.len() || matrix.nrows() != outputs.len() {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but the map binds {} outputs and {} inputs",
                matrix.nrows(),
                matrix.ncols(),
                outputs.len(),
                inputs.len()
            )));
        }
        check_distinct(&inputs, "input")?;
        check_distinct(&outputs, "output")?;
        Ok(ModeMap {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Map whose outputs are its own inputs.
    pub fn square(modes: Vec<Mode>, matrix: DMatrix<Complex64>) -> Result<Self> {
        ModeMap::new(modes.clone(), modes, matrix)
    }

    /// Real-valued square map given row-major.
    pub fn square_real(modes: Vec<Mode>, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0));
        ModeMap::square(modes, matrix)
    }

    pub fn inputs(&self) -> &[Mode] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Mode] {
        &self.outputs
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_square_on_inputs(&self) -> bool {
        self.inputs == self.outputs
    }

    /// `M†M = I` within `tol` (an isometry; for square maps, unitary).
    pub fn is_isometry(&self, tol: f64) -> bool {
        let gram = self.matrix.adjoint() * &self.matrix;
        let id = DMatrix::<Complex64>::identity(gram.nrows(), gram.ncols());
        (gram - id).iter().all(|z| z.norm() <= tol)
    }

    /// `U·U† = I` within `tol`; requires a square matrix.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.matrix.nrows() != self.matrix.ncols() {
            return false;
        }
        let gram = &self.matrix * self.matrix.adjoint();
        let id = DMatrix::<Complex64>::identity(gram.nrows(), gram.ncols());
        (gram - id).iter().all(|z| z.norm() <= tol) && self.is_isometry(tol)
    }

    pub fn max_singular_value(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// `other ∘ self` for two square maps over the same ordered mode list.
    pub fn then(&self, other: &ModeMap) -> Result<ModeMap> {
        if self.outputs != other.inputs {
            return Err(Error::Shape(
                "composition requires matching intermediate modes".into(),
            ));
        }
        ModeMap::new(
            self.inputs.clone(),
            other.outputs.clone(),
            &other.matrix * &self.matrix,
        )
    }

    pub(crate) fn images(&self) -> HashMap<Mode, Image> {
        let mut table = HashMap::with_capacity(self.inputs.len());
        for (j, input) in self.inputs.iter().enumerate() {
            let img: Image = self
                .outputs
                .iter()
                .enumerate()
                .filter_map(|(i, out)| {
                    let z = self.matrix[(i, j)];
                    (z != Complex64::new(0.0, 0.0)).then_some((*out, z))
                })
                .collect();
            table.insert(*input, img);
        }
        table
    }
}

/// Substitutes each creation operator in `s` by its image under `map`.
pub fn apply_mode_map(s: &PhotonState, map: &ModeMap) -> Result<PhotonState> {
    let table = map.images();
    s.substitute(|mode| Ok(table.get(mode).cloned()))
}

/// Serialized form: modes as label strings, the matrix as row-major
/// `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
pub(crate) struct ModeMapRepr {
    pub inputs: Vec<Mode>,
    pub outputs: Vec<Mode>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&ModeMap> for ModeMapRepr {
    fn from(map: &ModeMap) -> Self {
        let matrix = (0..map.matrix.nrows())
            .map(|i| {
                (0..map.matrix.ncols())
                    .map(|j| {
                        let z = map.matrix[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        ModeMapRepr {
            inputs: map.inputs.clone(),
            outputs: map.outputs.clone(),
            matrix,
        }
    }
}

impl TryFrom<ModeMapRepr> for ModeMap {
    type Error = Error;
    fn try_from(repr: ModeMapRepr) -> Result<Self> {
        let rows = repr.matrix.len();
        let cols = repr.matrix.first().map_or(repr.inputs.len(), Vec::len);
        if repr.matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        let matrix = DMatrix::from_fn(rows, cols, |i, j| {
            let [re, im] = repr.matrix[i][j];
            Complex64::new(re, im)
        });
        ModeMap::new(repr.inputs, repr.outputs, matrix)
    }
}

impl Serialize for ModeMap {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ModeMapRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModeMap {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        ModeMapRepr::deserialize(deserializer)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}
