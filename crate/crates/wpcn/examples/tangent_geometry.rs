//! ASCII picture of the geometry behind the time-minimization solver: the
//! charging-time curve V(τ) of one user, its asymptote D/γ, and the slope -1
//! completion line that touches it at the tangent point.
//!
//! ```bash
//! cargo run -p wpcn --example tangent_geometry
//! ```

use wpcn::ttm::{tangent_point, v_curve};

fn main() -> wpcn::Result<()> {
    let (gamma, demand) = (1.0, 1.0);
    let tp = tangent_point(gamma, demand)?;
    println!(
        "user with gamma = {gamma}, demand = {demand}: tangent slot = {:.4}, minimum completion = {:.4}\n",
        tp.tau, tp.completion
    );

    // Plot V(τ) and the line C^m - τ over τ in (0, 3.2].
    let (cols, rows) = (64usize, 20usize);
    let (tau_max, y_max) = (3.2, 6.0);
    let mut canvas = vec![vec![' '; cols]; rows];
    let columns = (0..cols).map(|c| (c + 1) as f64 / cols as f64 * tau_max);
    for (col, tau) in columns.enumerate() {
        let v = v_curve(gamma, demand, tau)?;
        if v < y_max {
            let row = ((1.0 - v / y_max) * (rows - 1) as f64).round() as usize;
            canvas[row][col] = '*';
        }
        let line = tp.completion - tau;
        if line >= 0.0 && line < y_max {
            let row = ((1.0 - line / y_max) * (rows - 1) as f64).round() as usize;
            if canvas[row][col] == '*' {
                canvas[row][col] = 'T'; // tangency
            } else if canvas[row][col] == ' ' {
                canvas[row][col] = '.';
            }
        }
    }
    println!("prior charging time needed vs own slot length");
    println!("(* = V curve, . = completion line of slope -1, T = touch point)\n");
    for (r, row) in canvas.iter().enumerate() {
        let y = (1.0 - r as f64 / (rows - 1) as f64) * y_max;
        println!("{y:>5.1} |{}", row.iter().collect::<String>());
    }
    println!("      +{}", "-".repeat(cols));
    println!("       0{:>width$.1}", tau_max, width = cols - 1);
    Ok(())
}
