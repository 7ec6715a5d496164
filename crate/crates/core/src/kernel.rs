//! Compact-support smoothing kernels and their moments.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Kernel family. Only compactly supported kernels belong here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
}

/// `kappa1 = ∫K`, `kappa2 = ∫K²`, `mu2 = ∫x²K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    pub kappa1: f64,
    pub kappa2: f64,
    pub mu2: f64,
}

impl KernelSpec {
    pub const EPANECHNIKOV: KernelSpec = KernelSpec {
        family: KernelFamily::Epanechnikov,
    };

    /// Half-width of the support; the kernel vanishes outside `[-w, w]`.
    pub fn support_halfwidth(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 1.0,
        }
    }

    /// Kernel value without input validation. Used on hot paths where `x`
    /// is known to be finite.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return invalid(format!("kernel argument must be finite, got {x}"));
        }
        Ok(self.value(x))
    }

    /// Closed-form moments. The quadrature in [`integrate`] serves as a
    /// cross-check in tests.
    pub fn moments(&self) -> KernelMoments {
        match self.family {
            KernelFamily::Epanechnikov => KernelMoments {
                kappa1: 1.0,
                kappa2: 0.6,
                mu2: 0.2,
            },
        }
    }

    /// Moments by adaptive Simpson quadrature over the support.
    pub fn moments_by_quadrature(&self) -> KernelMoments {
        let w = self.support_halfwidth();
        let tol = 1e-13;
        KernelMoments {
            kappa1: integrate(|x| self.value(x), -w, w, tol),
            kappa2: integrate(|x| self.value(x).powi(2), -w, w, tol),
            mu2: integrate(|x| x * x * self.value(x), -w, w, tol),
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }

    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, tol, 50)
}
