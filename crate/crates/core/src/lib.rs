//! Knowledge-graph prompt learning for frozen vision-language encoders, with
//! relation-type pruning of the knowledge subgraphs and a feature
//! decorrelation regularizer.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod frozen_clip;
pub mod ftcp;
pub mod graph_encoder;
pub mod gtcp;
pub mod numerics;
pub mod ontology;
pub mod pipeline;
pub mod prompting;

pub use error::{Error, Result};
