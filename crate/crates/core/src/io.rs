//! Plain-text output of fields and diagnostics.

use std::io::Write;

use crate::error::Result;
use crate::fields::CellField;
use crate::scheme::StepDiagnostics;

/// Writes `i,j,x,y,value` rows at cell centers, `i` fastest.
pub fn write_field_csv<W: Write>(mut w: W, field: &CellField) -> Result<()> {
    let g = field.grid();
    let (xc, yc) = (g.x_axis().centers(), g.y_axis().centers());
    writeln!(w, "i,j,x,y,value")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(w, "{i},{j},{:e},{:e},{:e}", xc[i], yc[j], field.get(i, j))?;
        }
    }
    Ok(())
}

/// Writes cell fields as a legacy ASCII VTK structured grid whose points are
/// the cell centers.
pub fn write_vtk<W: Write>(mut w: W, title: &str, fields: &[(&str, &CellField)]) -> Result<()> {
    let Some((_, first)) = fields.first() else {
        return Err(crate::error::Error::domain("no fields to write"));
    };
    let g = first.grid().clone();
    for (name, f) in fields {
        crate::fields::ensure_same_grid(f.grid(), &g, "vtk fields")?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(crate::error::Error::domain(format!("invalid VTK field name '{name}'")));
        }
    }
    let (xc, yc) = (g.x_axis().centers(), g.y_axis().centers());
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} 1", g.nx(), g.ny())?;
    writeln!(w, "POINTS {} double", g.n_cells())?;
    for y in yc {
        for x in xc {
            writeln!(w, "{x:e} {y:e} 0")?;
        }
    }
    writeln!(w, "POINT_DATA {}", g.n_cells())?;
    for (name, f) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in f.values() {
            writeln!(w, "{v:e}")?;
        }
    }
    Ok(())
}

pub const DIAGNOSTICS_HEADER: &str =
    "t,mass,u_max,u_min,z_max,argmax_i,argmax_j,iters_z,iters_u,dz_inf,uniqueness_ok";

/// Writes one diagnostics row per record under [`DIAGNOSTICS_HEADER`].
pub fn write_diagnostics_csv<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = &'a StepDiagnostics>,
) -> Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for d in rows {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{},{},{},{},{:e},{}",
            d.t,
            d.mass,
            d.u_max,
            d.u_min,
            d.z_max,
            d.argmax_u.0,
            d.argmax_u.1,
            d.solver_iters_z,
            d.solver_iters_u,
            d.dz_inf,
            d.uniqueness_ok
        )?;
    }
    Ok(())
}
