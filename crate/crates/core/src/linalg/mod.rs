//! Dense tensors, contraction and the truncated factorizations the tensor
//! network code is built on.

mod decomp;
mod tensor;

pub use decomp::{
    eigh, qr, svd, svd_truncate, svd_truncate_matrix, truncation_rank, BindingConstraint, Matrix,
    SvdTruncated, Truncation, TruncationPolicy,
};
pub use tensor::{contract, matmul, Tensor, C64, ONE, ZERO};
