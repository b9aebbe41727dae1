use std::cell::RefCell;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

thread_local! {
    static PLANNER_F64: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
    static PLANNER_F32: RefCell<RealFftPlanner<f32>> = RefCell::new(RealFftPlanner::new());
}

pub(crate) fn forward_f64(len: usize) -> Arc<dyn RealToComplex<f64>> {
    PLANNER_F64.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse_f64(len: usize) -> Arc<dyn ComplexToReal<f64>> {
    PLANNER_F64.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

pub(crate) fn forward_f32(len: usize) -> Arc<dyn RealToComplex<f32>> {
    PLANNER_F32.with(|p| p.borrow_mut().plan_fft_forward(len))
}
