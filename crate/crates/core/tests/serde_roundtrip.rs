use fslm::model::build_model;
use fslm::{ExcitationProfile, FslmModel, ModelSpec, PaddleAngles, SeedPath};

#[test]
fn model_survives_json_round_trip() {
    let spec = ModelSpec::new(vec![1, 2, 3], 4, ExcitationProfile::uniform_first_groups(3));
    let model = build_model(&spec, &mut SeedPath::new(12).stream()).unwrap();
    let text = serde_json::to_string(&model).unwrap();
    let back: FslmModel = serde_json::from_str(&text).unwrap();
    let angles = PaddleAngles::new(vec![0.3, 1.1, 2.0, 5.9]);
    assert_eq!(
        model.propagate(&angles).unwrap().intensities(),
        back.propagate(&angles).unwrap().intensities()
    );
}
