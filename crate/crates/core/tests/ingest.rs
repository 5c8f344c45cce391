//! Ingestion of hand-written fixtures in the default 8064-row layout.

use std::fs;
use std::path::Path;

use physio_explain::pipeline::ingest_dataset;
use physio_explain::signal::ChannelKind;
use physio_explain::Error;

const HEADER: &str = "hEOG,vEOG,zEMG,tEMG,SCR,PPG,Resp,Temp";

fn write_trial(dir: &Path, subject: u32, trial: u32, header: &str, rows: usize, labels: Option<&str>) {
    let sdir = dir.join(format!("subject_{subject}"));
    fs::create_dir_all(&sdir).unwrap();
    let cols = header.split(',').count();
    let mut body = String::from(header);
    body.push('\n');
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{}", (r * (c + 1)) as f64 * 0.001 + c as f64)).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    fs::write(sdir.join(format!("trial_{trial}.csv")), body).unwrap();
    if let Some(l) = labels {
        fs::write(sdir.join(format!("trial_{trial}.labels.csv")), format!("valence,arousal,liking\n{l}\n")).unwrap();
    }
}

fn ingestion_message(dir: &Path) -> String {
    match ingest_dataset(dir) {
        Err(e @ Error::Ingestion { .. }) => {
            assert!(e.is_validation());
            e.to_string()
        }
        other => panic!("expected an ingestion error, got {other:?}"),
    }
}

#[test]
fn well_formed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    for s in [2, 1] {
        for t in [3, 1, 2] {
            write_trial(dir.path(), s, t, HEADER, 8064, Some("7,2.5,5"));
        }
    }
    let trials = ingest_dataset(dir.path()).unwrap();
    assert_eq!(trials.len(), 6);
    let ids: Vec<(u32, u32)> = trials.iter().map(|t| (t.subject_id, t.trial_id)).collect();
    assert_eq!(ids, vec![(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]);
    for t in &trials {
        assert_eq!(t.channels.len(), 8);
        assert_eq!(t.channel(ChannelKind::Temp).len(), 7680);
        assert_eq!(t.baselines[&ChannelKind::Temp].len(), 384);
        assert_eq!(t.ratings.valence, 7.0);
    }
    // Row 385 of the file is the first signal sample; Temp is column 7.
    assert_eq!(trials[0].channel(ChannelKind::Temp).values()[0], 384.0 * 8.0 * 0.001 + 7.0);
}

#[test]
fn column_order_is_free() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, "Temp,Resp,PPG,SCR,tEMG,zEMG,vEOG,hEOG", 8064, Some("1,1,1"));
    let trials = ingest_dataset(dir.path()).unwrap();
    assert_eq!(trials[0].channel(ChannelKind::Temp).values()[0], 384.0 * 0.001);
}

#[test]
fn seven_channels_name_the_missing_one() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, "hEOG,vEOG,zEMG,tEMG,SCR,PPG,Resp", 8064, Some("5,5,5"));
    let msg = ingestion_message(dir.path());
    assert!(msg.contains("Temp"), "{msg}");
    assert!(msg.contains("trial_1.csv"), "{msg}");
}

#[test]
fn short_file_cites_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, HEADER, 8063, Some("5,5,5"));
    let msg = ingestion_message(dir.path());
    assert!(msg.contains("8063") && msg.contains("expected 8064"), "{msg}");
}

#[test]
fn non_numeric_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, HEADER, 8064, Some("5,5,5"));
    let path = dir.path().join("subject_1/trial_1.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[10].split(',').collect();
    cells[5] = "abc";
    lines[10] = cells.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let msg = ingestion_message(dir.path());
    assert!(msg.contains("row 11") && msg.contains("column PPG"), "{msg}");
}

#[test]
fn missing_labels_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, HEADER, 8064, None);
    let msg = ingestion_message(dir.path());
    assert!(msg.contains("labels"), "{msg}");
}

#[test]
fn out_of_range_rating_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_trial(dir.path(), 1, 1, HEADER, 8064, Some("0.5,5,5"));
    ingestion_message(dir.path());
}
