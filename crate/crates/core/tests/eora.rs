//! The EORA adapter on small hand-made exports.

use std::fs;
use std::path::Path;

use eeflow_core::ingest::eora::adapt_eora;
use eeflow_core::ingest::{load_dataset, MANIFEST_FILE};
use eeflow_core::model::EnergySemantics;

const FD_CATEGORIES: [&str; 6] = [
    "Household final consumption P.3h",
    "Non-profit institutions serving households P.3n",
    "Government final consumption P.3g",
    "Gross fixed capital formation P.51",
    "Changes in inventories P.52",
    "Acquisitions less disposals of valuables P.53",
];

const Q_LABELS: [&str; 6] = [
    "Energy Usage (TJ)\tNatural Gas",
    "Energy Usage (TJ)\tCoal",
    "I-GHG-CO2 emissions (Gg)\tCoal",
    "Energy Usage (TJ)\tTotal Energy Usage",
    "Energy Usage (TJ)\tHydroelectric Electricity",
    "Water Footprint\tBlue",
];

struct Export {
    /// (name, code) per economy, ROW last
    economies: Vec<(String, String)>,
    sectors: Vec<String>,
}

impl Export {
    fn rows(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (e, (_, code)) in self.economies.iter().enumerate() {
            let n = if code == "ROW" { 1 } else { self.sectors.len() };
            for s in 0..n {
                out.push((e, s));
            }
        }
        out
    }

    fn t(&self, r: usize, c: usize) -> f64 {
        (r * 7 + c * 3 % 5) as f64 + 1.0
    }

    fn fd(&self, r: usize, c: usize) -> f64 {
        (r + 2 * c) as f64 + 0.5
    }

    fn q(&self, q: usize, c: usize) -> f64 {
        (10 * q + c) as f64
    }

    fn write(&self, dir: &Path) {
        let rows = self.rows();
        let label = |&(e, s): &(usize, usize)| {
            let (name, code) = &self.economies[e];
            let sector = if code == "ROW" {
                "TOTAL"
            } else {
                &self.sectors[s]
            };
            format!("{name}\t{code}\tIndustries\t{sector}")
        };
        let labels_t: Vec<String> = rows.iter().map(label).collect();
        fs::write(dir.join("labels_T.txt"), labels_t.join("\n") + "\n").unwrap();
        let mut labels_fd = Vec::new();
        for (name, code) in &self.economies {
            for cat in FD_CATEGORIES {
                labels_fd.push(format!("{name}\t{code}\tFinal Demand\t{cat}"));
            }
        }
        fs::write(dir.join("labels_FD.txt"), labels_fd.join("\n") + "\n").unwrap();
        fs::write(dir.join("labels_Q.txt"), Q_LABELS.join("\n") + "\n").unwrap();

        let n = rows.len();
        let nfd = labels_fd.len();
        let matrix = |nr: usize, nc: usize, f: &dyn Fn(usize, usize) -> f64| -> String {
            (0..nr)
                .map(|r| {
                    (0..nc)
                        .map(|c| f(r, c).to_string())
                        .collect::<Vec<_>>()
                        .join("\t")
                })
                .collect::<Vec<_>>()
                .join("\n")
                + "\n"
        };
        fs::write(
            dir.join("Eora26_2016_bp_T.txt"),
            matrix(n, n, &|r, c| self.t(r, c)),
        )
        .unwrap();
        fs::write(
            dir.join("Eora26_2016_bp_FD.txt"),
            matrix(n, nfd, &|r, c| self.fd(r, c)),
        )
        .unwrap();
        fs::write(
            dir.join("Eora26_2016_bp_Q.txt"),
            matrix(Q_LABELS.len(), n, &|r, c| self.q(r, c)),
        )
        .unwrap();
    }
}

fn economies(codes: &[(&str, &str)]) -> Vec<(String, String)> {
    codes
        .iter()
        .map(|(n, c)| (n.to_string(), c.to_string()))
        .collect()
}

#[test]
fn small_export_maps_every_array() {
    let export = Export {
        economies: economies(&[("Alpha", "AAA"), ("Beta", "BBB"), ("Rest of World", "ROW")]),
        sectors: vec![
            "Agriculture".into(),
            "Fishing".into(),
            "Electricity, Gas and Water".into(),
        ],
    };
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export.write(input.path());
    let (manifest, report) = adapt_eora(input.path(), output.path()).unwrap();
    assert_eq!((manifest.n_sectors, manifest.n_economies), (3, 2));
    assert_eq!(manifest.year, 2016);
    assert_eq!(manifest.energy_semantics, EnergySemantics::Total);
    assert_eq!(report.dropped_rows, 1);
    assert_eq!(report.final_demand_categories.len(), 6);
    assert_eq!(report.energy_rows.len(), 3);

    let d = load_dataset(&output.path().join(MANIFEST_FILE))
        .unwrap()
        .dataset;
    let codes: Vec<&str> = d.sectors.iter().map(|s| s.code.as_str()).collect();
    assert_eq!(codes, vec!["A", "F", "EGAW"]);
    assert_eq!(d.economies[1].code, "BBB");
    assert_eq!(d.economies[1].name, "Beta");

    let n_all = 7;
    let nfd = 18;
    for h in 0..6 {
        // ROW is the last raw row and column, so kept indices coincide
        for k in 0..6 {
            assert_eq!(d.intermediate_use[[h, k]], export.t(h, k));
        }
        let o: f64 = (0..n_all).map(|k| export.t(h, k)).sum::<f64>()
            + (0..nfd).map(|c| export.fd(h, c)).sum::<f64>();
        assert!((d.total_output[h] - o).abs() < 1e-9);
        for beta in 0..2 {
            let f: f64 = (0..6).map(|c| export.fd(h, beta * 6 + c)).sum();
            assert_eq!(d.final_demand[[h, beta]], f);
        }
        let c = export.q(0, h) + export.q(1, h) + export.q(4, h);
        assert_eq!(d.energy_satellite[[h % 3, h / 3]], c);
    }
}

#[test]
fn twenty_six_sectors_use_reference_codes() {
    let sectors: Vec<String> = (1..=26).map(|i| format!("Raw sector {i}")).collect();
    let export = Export {
        economies: economies(&[("Alpha", "AAA"), ("Rest of World", "ROW")]),
        sectors,
    };
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export.write(input.path());
    adapt_eora(input.path(), output.path()).unwrap();
    let d = load_dataset(&output.path().join(MANIFEST_FILE))
        .unwrap()
        .dataset;
    assert_eq!(d.sectors.len(), 26);
    assert_eq!(d.sectors[12].code, "EGW");
    assert_eq!(d.sectors[6].code, "PC");
}

#[test]
fn inconsistent_exports_rejected() {
    let export = Export {
        economies: economies(&[("Alpha", "AAA"), ("Beta", "BBB")]),
        sectors: vec!["One".into(), "Two".into()],
    };
    let (input, output) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export.write(input.path());
    // drop one T row
    let path = input.path().join("Eora26_2016_bp_T.txt");
    let text = fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().skip(1).collect();
    fs::write(&path, kept.join("\n")).unwrap();
    assert!(adapt_eora(input.path(), output.path()).is_err());

    let empty = tempfile::tempdir().unwrap();
    assert!(adapt_eora(empty.path(), output.path()).is_err());
}
