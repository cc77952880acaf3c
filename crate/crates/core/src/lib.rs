//! Perturbed convex optimization: partial and alternating minimization,
//! sup-norm expansions, and Bradley-Terry-Luce ranking experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod ao;
pub mod btl;
pub mod cli;
pub mod expansions;
pub mod experiments;
pub mod numkit;
pub mod objective;
pub mod tol;
