use lhs_core::conic::SolverConfig;
use lhs_core::geometry::{solid_directions, Solid};
use lhs_core::lhs::{certify, verify_certificate, LhsCertificate, LhsMode, VERIFY_TOL};
use lhs_core::states::{sample_hs_dims, werner};
use lhs_core::RngStream;

#[test]
fn certificates_survive_serialization() {
    let set = solid_directions(Solid::Icosahedron);
    let rho = werner(0.42).unwrap();
    let out = certify(&rho, &set, &LhsMode::Projective, &SolverConfig::default()).unwrap();
    let cert = out.certificate().expect("werner 0.42 is below the icosahedron threshold");
    let back = LhsCertificate::from_json(&cert.to_json()).unwrap();
    let report = verify_certificate(&back, &rho).unwrap();
    assert!(!report.flagged);
    assert!(report.max_violation <= VERIFY_TOL);

    // the same certificate does not vouch for a different state
    let other = sample_hs_dims(&[2, 2], &mut RngStream::new(1, 0));
    assert!(verify_certificate(&back, &other).unwrap().flagged);
}

#[test]
fn certificate_json_rejects_garbage() {
    assert!(LhsCertificate::from_json("{}").is_err());
    assert!(LhsCertificate::from_json("not json").is_err());
}
