//! Finitary combinatorics of perfect-tree (Sacks) forcing.
//!
//! Perfect subtrees of the binary tree are represented lazily by their
//! splitting skeleton `c ↦ t_c`; continuous functions on branch spaces by
//! monotone codes with an explicit properness modulus. On top of these sit
//! the catching constructions (single tree and finite products with
//! avoidance of a countable family), the even/odd encoding of a function
//! together with a witness, and the block construction that builds a
//! function eventually different from a family while agreeing with a given
//! function on a prescribed set.

pub mod catch;
pub mod codes;
pub mod encode;
pub mod error;
pub mod func;
pub mod ned;
pub mod orders;
pub mod product;
pub mod report;
pub mod sampling;
pub mod trees;

pub use catch::{catch_single, verify_catch, CatchResult, CatchTrace};
pub use codes::{AnyCode, Code, CodeSpec, ProductCode, TableCode, TransducerCode};
pub use encode::{coherence_check, decode_g, encode_g, encode_prefix};
pub use error::{Error, Result};
pub use func::{FnSpec, NatFn};
pub use ned::{build_h, compute_m_seq, verify_ned, NedInput, NedSpec};
pub use orders::{FinBits, FinWord};
pub use product::{
    catch_product, greedy_med_stage, verify_product_catch, EdFamily, ProductCatchResult, ProductCondition,
};
pub use report::{Check, Report, Status};
pub use trees::{SkeletonTree, TreeSpec};
