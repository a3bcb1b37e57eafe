use preptensor::factorize::weight;
use preptensor_demo::{weight_curve, weight_curve_points, ToyModel};

#[test]
fn curve_matches_weight_function() {
    let pts = weight_curve_points(10.0, 0.75, 20.0, 41);
    assert_eq!(pts.len(), 41);
    assert_eq!(pts[0], (0.0, 0.0));
    assert_eq!(pts[40].0, 20.0);
    for (x, w) in &pts {
        assert_eq!(*w, weight(*x, 10.0, 0.75));
    }
    let json: serde_json::Value = serde_json::from_str(&weight_curve(10.0, 0.75, 20.0, 41)).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 41);
    assert_eq!(json[20]["x"], 10.0);
    assert_eq!(json[20]["w"], 1.0);
}

#[test]
fn toy_model_answers_queries() {
    let m = ToyModel::new(1500, 8, 5, 3).unwrap();
    let s: serde_json::Value = serde_json::from_str(&m.summary()).unwrap();
    assert_eq!(s["dim"], 8);
    assert_eq!(s["losses"].as_array().unwrap().len(), 5);
    assert_eq!(s["prepositions"].as_array().unwrap().len(), 49);

    let c = m.similarity("in", "on").unwrap();
    assert!((-1.0..=1.0).contains(&c));
    assert!((m.similarity("in", "in").unwrap() - 1.0).abs() < 1e-12);

    let ranked: serde_json::Value =
        serde_json::from_str(&m.paraphrase("sparked", "off", "prompted, delivered endured").unwrap()).unwrap();
    let d: Vec<f64> = ranked
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["distance"].as_f64().unwrap())
        .collect();
    assert_eq!(d.len(), 3);
    assert!(d.windows(2).all(|w| w[0] <= w[1]));

    let spec: Vec<f64> = serde_json::from_str(&m.spectrum("of", 6).unwrap()).unwrap();
    assert_eq!(spec.len(), 6);
    assert_eq!(spec[0], 1.0);
    assert!(spec.windows(2).all(|w| w[0] >= w[1]));
}
