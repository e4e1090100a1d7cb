// SPDX-License-Identifier: Apache-2.0

//! Surface notation: reader, loader and printer.

pub mod names;
pub mod parser;
pub mod printer;
pub mod sexp;

pub use names::{Decl, DeclKind, Names};
pub use parser::{literal_address, parse, parse_expr, parse_type, read_item_count, SurfaceProgram};
pub use printer::{render, render_expr, render_type, Printer};
pub use sexp::{ParseError, Pos};
