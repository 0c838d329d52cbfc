//! Sensitivity type checking and inference for a linear indexed language.

pub mod ast;
pub mod cli;
pub mod backend;
pub mod constraints;
pub mod dynsem;
pub mod ext_real;
pub mod semantics;
pub mod syntax;
pub mod typing;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/simplification.md")]
    mod simplification {}
    #[doc = include_str!("../../../book/src/deciding.md")]
    mod deciding {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
