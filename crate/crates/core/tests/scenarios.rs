mod common;

use std::fs;
use std::path::Path;

use common::{blessing, data_dir, reference_sort_byte, scenario_config};
use oasort::metrics::{evaluate, DEFAULT_IOU_MATCH};
use oasort::mot::{format_results, results_to_annotations};
use oasort::synth::{canonical_specs, generate, preset, write_scenario, PRESET_NAMES};
use oasort::tracker::{ablation_variant, run_sequence, AblationPreset};
use oasort::Tracker;

fn golden(path: &Path, actual: &str) {
    if blessing() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(path).unwrap_or_else(|e| {
        panic!(
            "{}: {e} (run with OASORT_BLESS=1 to create)",
            path.display()
        )
    });
    assert!(
        expected == actual,
        "{} differs from the pinned output",
        path.display()
    );
}

#[test]
fn generated_files_match_pinned_copies() {
    for spec in canonical_specs() {
        let dir = tempfile::tempdir().unwrap();
        write_scenario(&spec, &generate(&spec).unwrap(), dir.path()).unwrap();
        for file in ["gt.txt", "det.txt", "scenario.json"] {
            let text = fs::read_to_string(dir.path().join(file)).unwrap();
            golden(&data_dir().join(&spec.name).join(file), &text);
        }
    }
}

#[test]
fn tracker_outputs_match_pinned_copies() {
    for spec in canonical_specs() {
        let dets = generate(&spec).unwrap().dets;
        let base = scenario_config(&spec);
        let baseline = ablation_variant(&base, AblationPreset::Baseline);
        golden(
            &data_dir().join(&spec.name).join("baseline.txt"),
            &format_results(&reference_sort_byte(&baseline, &dets)),
        );
        let mut t = Tracker::new(baseline).unwrap();
        golden(
            &data_dir().join(&spec.name).join("baseline.txt"),
            &format_results(&run_sequence(&mut t, &dets).unwrap()),
        );
        let mut t = Tracker::new(ablation_variant(&base, AblationPreset::Full)).unwrap();
        golden(
            &data_dir().join(&spec.name).join("full.txt"),
            &format_results(&run_sequence(&mut t, &dets).unwrap()),
        );
    }
}

#[test]
fn clean_presets_track_perfectly() {
    for spec in canonical_specs() {
        let clean = spec.without_degradation();
        let s = generate(&clean).unwrap();
        let mut t = Tracker::new(scenario_config(&clean)).unwrap();
        let out = results_to_annotations(&run_sequence(&mut t, &s.dets).unwrap());
        let e = evaluate(&s.gt, &out, DEFAULT_IOU_MATCH).unwrap();
        assert_eq!((e.mota, e.idf1, e.idsw), (1.0, 1.0, 0), "{}", spec.name);
    }
}

fn longest_run(flags: impl Iterator<Item = bool>) -> usize {
    let (mut best, mut cur) = (0, 0);
    for f in flags {
        cur = if f { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

#[test]
fn crossing_hides_the_back_object() {
    let spec = preset("crossing").unwrap();
    let s = generate(&spec).unwrap();
    // Object 2 has the higher bottom edge and walks behind object 1.
    let back = |f: &u32| s.gt[f].iter().position(|(id, _)| *id == 2).unwrap();
    let heavy = s.gt_occlusion.iter().map(|(f, oc)| oc[back(f)] > 0.75);
    assert!(longest_run(heavy) >= 10);

    let high = scenario_config(&spec).high_thresh;
    for (f, oc) in &s.gt_occlusion {
        let i = back(f);
        if oc[i] > 0.75 {
            assert!(s.dets[f][i].score < high, "frame {f}");
        }
        let front = 1 - i;
        assert_eq!(oc[front], 0.0);
        assert_eq!(s.dets[f][front].score, 1.0);
    }
}

#[test]
fn occlusion_offset_repairs_the_crossing() {
    let spec = preset("crossing").unwrap();
    let s = generate(&spec).unwrap();
    let score = |p: AblationPreset| {
        let mut t = Tracker::new(ablation_variant(&scenario_config(&spec), p)).unwrap();
        let out = results_to_annotations(&run_sequence(&mut t, &s.dets).unwrap());
        evaluate(&s.gt, &out, DEFAULT_IOU_MATCH).unwrap()
    };
    let base = score(AblationPreset::Baseline);
    assert!(base.idsw >= 1 && base.idf1 < 1.0, "{base:?}");
    let full = score(AblationPreset::Full);
    assert_eq!((full.idsw, full.idf1), (0, 1.0), "{full:?}");
}

#[test]
fn every_preset_name_resolves() {
    for name in PRESET_NAMES {
        assert_eq!(preset(name).unwrap().name, name);
    }
}
