//! CSV dumps of every field the pipeline produced.

use std::fs;
use std::path::{Path, PathBuf};

use ccembed_core::curvature::PlaneFamily;

use crate::pipeline::Artifacts;

/// One header row, then one row of numbers per record.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `g11, g12, ..., gmm` (upper triangle).
fn tensor_names(prefix: &str, m: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 1..=m {
        for j in i..=m {
            out.push(format!("{prefix}{i}{j}"));
        }
    }
    out
}

fn upper(s: &ccembed_core::SymMat) -> Vec<f64> {
    let m = s.dim();
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            out.push(s.get(i, j));
        }
    }
    out
}

fn header(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// Writes every available field into `dir` and returns the files written.
pub fn dump_fields(dir: &Path, art: &Artifacts) -> csv::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, head: Vec<String>, rows: Vec<Vec<f64>>| -> csv::Result<()> {
        let path = dir.join(name);
        write_csv(&path, &head, rows)?;
        written.push(path);
        Ok(())
    };
    let m = art.spec.dim();
    let nb = art.boundary.axes.len();
    let r_col = vec!["r".to_string()];

    if let Some(k) = &art.kappa {
        let rows = k.params.iter().zip(&k.values).map(|(p, v)| p.iter().copied().chain([*v]).collect()).collect();
        put("kappa.csv", header(&[&names("y", nb), &["kappa".to_string()]]), rows)?;
    }
    for (family, scan) in &art.limit_scans {
        let name = match family {
            PlaneFamily::Normal => "limit_scan_normal.csv",
            PlaneFamily::Tangential => "limit_scan_tangential.csv",
        };
        put(name, vec!["r".into(), "error".into()], scan.iter().map(|&(r, e)| vec![r, e]).collect())?;
    }
    if let Some(nf) = &art.normal_form {
        // the compactified metric of lambda^2 g at the collar nodes, chart coordinates
        let mut rows = Vec::with_capacity(nf.grid.len());
        for (idx, p) in nf.points.iter().enumerate() {
            let gbar = art.scaled.eval_bar(p).map_err(|e| std::io::Error::other(e.to_string()))?;
            rows.push([nf.grid.r_of(idx)].into_iter().chain(p.iter().copied()).chain(upper(&gbar)).collect());
        }
        put("metric.csv", header(&[&r_col, &names("y", m), &tensor_names("g", m)]), rows)?;

        let nbn = nf.grid.boundary.len();
        let rows = (0..nf.grid.len())
            .map(|idx| {
                let params = &nf.grid.boundary.nodes[idx % nbn].params;
                [nf.grid.r_of(idx)].into_iter().chain(params.iter().copied()).chain([nf.k2[idx]]).chain(upper(&nf.h[idx])).collect()
            })
            .collect();
        put("normal_form.csv", header(&[&r_col, &names("y", nb), &["k2".to_string()], &tensor_names("h", m - 1)]), rows)?;

        if let Some(g) = &art.adjusted {
            let rows = (0..nf.grid.len())
                .map(|idx| {
                    let params = &nf.grid.boundary.nodes[idx % nbn].params;
                    [nf.grid.r_of(idx)]
                        .into_iter()
                        .chain(params.iter().copied())
                        .chain(upper(&g.g.values[idx]))
                        .chain([g.min_eigenvalues[idx]])
                        .collect()
                })
                .collect();
            put("adjusted_metric.csv", header(&[&r_col, &names("y", nb), &tensor_names("G", m), &["min_eigenvalue".to_string()]]), rows)?;
        }
    }
    if let Some(p) = &art.profile {
        let rows = p.table_r.iter().map(|&r| vec![r, p.phi(r), p.x(r), p.one_plus_r_dphi(r)]).collect();
        put("profile.csv", ["r", "phi", "x", "one_plus_rphi"].map(String::from).to_vec(), rows)?;
    }
    if let Some(o) = &art.embedding {
        let e = &o.embedding;
        let rows = (0..e.len()).map(|f| e.grid.coords(f).into_iter().chain(e.point(f).iter().copied()).collect()).collect();
        put("embedding.csv", header(&[&r_col, &names("y", m - 1), &names("v", e.n)]), rows)?;
        let rows = o.trace.iter().map(|t| vec![t.iter as f64, t.residual, t.step]).collect();
        put("trace.csv", ["iter", "residual", "step"].map(String::from).to_vec(), rows)?;
    }
    if let Some(u) = &art.pembedding {
        let rows = (0..u.len()).map(|f| u.grid.coords(f).into_iter().chain(u.image(f)).collect()).collect();
        put("pembedding.csv", header(&[&r_col, &names("y", m - 1), &["X".to_string()], &names("Y", u.v.n)]), rows)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_names() {
        assert_eq!(tensor_names("g", 2), ["g11", "g12", "g22"]);
        assert_eq!(names("v", 3), ["v1", "v2", "v3"]);
    }

    #[test]
    fn round_trips_numbers() {
        let dir = std::env::temp_dir().join(format!("ccembed-export-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let x = 0.1 + 0.2;
        write_csv(&path, &["a".into(), "b".into()], [vec![x, -1e-300]]).unwrap();
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(rec[0].parse::<f64>().unwrap(), x);
        assert_eq!(rec[1].parse::<f64>().unwrap(), -1e-300);
        fs::remove_dir_all(&dir).unwrap();
    }
}
