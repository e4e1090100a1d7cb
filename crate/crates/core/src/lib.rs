// SPDX-License-Identifier: Apache-2.0

//! Type checker and big-step interpreter for Lolisa, a typed Solidity subset,
//! over a block-addressed formal memory model.

pub mod ast;
pub mod check;
pub mod desugar;
pub mod dump;
pub mod env;
pub mod eval;
pub mod memory;
pub mod modules;
pub mod outcome;
pub mod run;
pub mod stdlib;
pub mod syntax;
pub mod types;
pub mod value;
