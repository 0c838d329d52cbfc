//! A call-by-value interpreter over exact rationals and an empirical check
//! that first-order programs respect their sensitivity bound.

mod eval;
mod lipschitz;

pub use eval::{apply, eval_closed, eval_term, with_eval_stack, Env, EvalError, PrimFn, PrimRegistry, Value, MAX_DEPTH};
pub use lipschitz::{instantiate_first_order, lipschitz_test, LipschitzReport, TOLERANCE};
