use crate::error::Result;

/// Scratch buffers for allocation-free RK4 steps.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    ytmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            ytmp: vec![0.0; n],
        }
    }
}

/// One classical fourth-order Runge-Kutta step of size `h`.
pub fn rk4_step<F>(y: &mut [f64], t: f64, h: f64, ws: &mut Rk4Workspace, mut f: F) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let Rk4Workspace {
        k1,
        k2,
        k3,
        k4,
        ytmp,
    } = ws;

    f(t, y, k1)?;
    for i in 0..n {
        ytmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, ytmp, k2)?;
    for i in 0..n {
        ytmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, ytmp, k3)?;
    for i in 0..n {
        ytmp[i] = y[i] + h * k3[i];
    }
    f(t + h, ytmp, k4)?;
    for i in 0..n {
        y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}
