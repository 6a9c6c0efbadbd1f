use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Mps;
use crate::error::{bail, Result};
use crate::linalg::{Tensor, C64};

pub const MPS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MpsFile {
    version: u32,
    n_sites: usize,
    ortho_center: Option<usize>,
    tensors: Vec<TensorFile>,
}

#[derive(Serialize, Deserialize)]
struct TensorFile {
    shape: Vec<usize>,
    data: Vec<[f64; 2]>,
}

impl Mps {
    /// JSON document; tensor data is row-major over `(l, s, r)`.
    pub fn to_json(&self) -> Result<String> {
        let file = MpsFile {
            version: MPS_FORMAT_VERSION,
            n_sites: self.n_sites(),
            ortho_center: self.ortho_center,
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorFile {
                    shape: t.shape().to_vec(),
                    data: t.data().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Mps> {
        let file: MpsFile = serde_json::from_str(s)?;
        if file.version != MPS_FORMAT_VERSION {
            bail!(InvalidArgument, "unsupported MPS format version {}", file.version);
        }
        if file.n_sites != file.tensors.len() {
            bail!(InvalidArgument, "n_sites {} but {} tensors", file.n_sites, file.tensors.len());
        }
        let tensors = file
            .tensors
            .into_iter()
            .map(|t| Tensor::from_vec(&t.shape, t.data.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let mut psi = Mps::from_tensors(tensors)?;
        if let Some(c) = file.ortho_center {
            if c >= psi.n_sites() {
                bail!(OutOfRange, "ortho_center {} on {} sites", c, psi.n_sites());
            }
        }
        psi.ortho_center = file.ortho_center;
        Ok(psi)
    }
}

pub fn write_mps(path: &Path, psi: &Mps) -> Result<()> {
    std::fs::write(path, psi.to_json()?)?;
    Ok(())
}

pub fn read_mps(path: &Path) -> Result<Mps> {
    Mps::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_byte_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = Mps::random(6, 3, &mut rng).unwrap();
        let a = psi.to_json().unwrap();
        let back = Mps::from_json(&a).unwrap();
        assert_eq!(back, psi);
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn bit_order_in_file() {
        // |01>: site 1 in state 1, so the amplitude sits at index 1.
        let psi = Mps::product_state(&[0, 1]).unwrap();
        let v = Mps::from_json(&psi.to_json().unwrap()).unwrap().to_statevector().unwrap();
        assert_eq!(v[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(Mps::from_json(r#"{"version":2,"n_sites":0,"ortho_center":null,"tensors":[]}"#).is_err());
        let bad = r#"{"version":1,"n_sites":1,"ortho_center":null,"tensors":[{"shape":[1,2,1],"data":[[1,0]]}]}"#;
        assert!(Mps::from_json(bad).is_err());
    }
}
