#include <cmath>

#include <Eigen/LU>

#include "iekf/camera.hpp"

namespace iekf {

void CameraModel::validate() const {
  const bool upper = K(1, 0) == 0.0 && K(2, 0) == 0.0 && K(2, 1) == 0.0;
  const double det = K(0, 0) * K(1, 1) * K(2, 2);
  if (!upper || !(std::abs(det) > 1e-12) || !K.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "camera K must be upper triangular and invertible");
  }
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(sigma_px >= 0.0)) throw Error(ErrorCode::InvalidArgument, "pixel sigma must be >= 0");
  if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_range must be positive");
}

CameraModel CameraModel::default_model() {
  CameraModel m;
  m.K << 460.0, 0.0, 376.0, 0.0, 460.0, 240.0, 0.0, 0.0, 1.0;
  return m;
}

bool CameraModel::visible(const Vec3& x) const {
  if (!(x.z() > 0.1) || x.norm() > max_range) return false;
  const Vec3 h = K * x;
  const double u = h.x() / h.z();
  const double v = h.y() / h.z();
  return u >= 0.0 && u <= width && v >= 0.0 && v <= height;
}

Extrinsics Extrinsics::default_extrinsics() {
  Extrinsics e;
  Mat3 R;
  R.col(0) = Vec3(0.0, -1.0, 0.0);
  R.col(1) = Vec3(0.0, 0.0, -1.0);
  R.col(2) = Vec3(1.0, 0.0, 0.0);
  e.R_IC = Rotation(R);
  e.p_IC = Vec3(0.1, 0.0, 0.0);
  return e;
}

CameraPose camera_pose(const Rotation& R, const Vec3& p, const Extrinsics& ext) {
  return {R.matrix() * ext.R_IC.matrix(), R.matrix() * ext.p_IC + p};
}

Vec2 project_camera_frame(const Vec3& x, const CameraModel& model, Mat23* jac) {
  const Mat3& K = model.K;
  if (model.mode == ProjectionMode::Pinhole) {
    if (!(x.z() > 0.0)) throw Error(ErrorCode::BehindCamera, "point behind the camera");
    const Vec3 h = K * x;
    const double iz = 1.0 / h.z();
    if (jac) {
      Mat23 dh;
      dh.row(0) = (K.row(0) - h.x() * iz * K.row(2)) * iz;
      dh.row(1) = (K.row(1) - h.y() * iz * K.row(2)) * iz;
      *jac = dh;
    }
    return Vec2(h.x() * iz, h.y() * iz);
  }
  const double r = x.norm();
  if (!(r > 0.0)) throw Error(ErrorCode::ZeroRange, "point at the camera centre");
  const Vec3 u = x / r;
  if (jac) *jac = K.topRows<2>() * (Mat3::Identity() - u * u.transpose()) / r;
  return K.topRows<2>() * u;
}

Vec2 project(const CameraPose& cam, const Vec3& f, const CameraModel& model) {
  return project_camera_frame(cam.to_camera(f), model);
}

Vec3 unproject(const Vec2& uv, const CameraModel& model) {
  const Mat3 Kinv = model.K.inverse();
  if (model.mode == ProjectionMode::Pinhole) return (Kinv * Vec3(uv.x(), uv.y(), 1.0)).normalized();
  // u = a + s·b with u₂ = s; pick the root of ‖u‖ = 1 nearest the optical axis.
  const Vec3 a = Kinv * Vec3(uv.x(), uv.y(), 0.0);
  const Vec3 b = Kinv * Vec3(0.0, 0.0, model.K(2, 2));
  const double qa = b.squaredNorm();
  const double qb = 2.0 * a.dot(b);
  const double qc = a.squaredNorm() - 1.0;
  const double disc = std::max(qb * qb - 4.0 * qa * qc, 0.0);
  const double s = (-qb + std::sqrt(disc)) / (2.0 * qa);
  return (a + s * b).normalized();
}

CloneMeasurementJacobians clone_measurement_jacobians(FilterKind kind, const ClonePose& clone,
                                                      const Vec3& f, const Extrinsics& ext,
                                                      const CameraModel& model) {
  const bool fej = kind == FilterKind::FEJ;
  const Mat3& R = fej ? clone.R_fej.matrix() : clone.R.matrix();
  const Vec3& p = fej ? clone.p_fej : clone.p;
  const Mat3 Ric_t = ext.R_IC.matrix().transpose();
  const Vec3 body = R.transpose() * (f - p);

  CloneMeasurementJacobians out;
  Mat23 dpi;
  const CameraPose cam = camera_pose(clone.R, clone.p, ext);
  out.predicted = project_camera_frame(cam.to_camera(f), model);
  project_camera_frame(Ric_t * (body - ext.p_IC), model, &dpi);

  const Mat23 dpiM = dpi * Ric_t * R.transpose();
  out.H_f = dpiM;
  out.H_X.rightCols<3>() = -dpiM;
  switch (kind) {
    case FilterKind::IEKF:
    case FilterKind::IJ_IEKF:
      out.H_X.leftCols<3>() = dpiM * skew(f);
      break;
    case FilterKind::EKF:
    case FilterKind::FEJ:
      out.H_X.leftCols<3>() = dpiM * skew(f - p);
      break;
    case FilterKind::QEKF:
      out.H_X.leftCols<3>() = dpi * Ric_t * skew(body);
      break;
  }
  return out;
}

LinearMeasurement landmark_measurement(const FilterInstance& filter, std::size_t j, const Vec2& z,
                                       const Extrinsics& ext, const CameraModel& model) {
  if (j >= filter.landmarks().size()) throw Error(ErrorCode::InvalidArgument, "no such landmark");
  const ImuState& s = filter.mean();
  const Vec3& f = filter.landmarks()[j];
  const Mat3& R = s.R.matrix();
  const Mat3 Ric_t = ext.R_IC.matrix().transpose();
  const Vec3 body = R.transpose() * (f - s.p);
  Mat23 dpi;
  const Vec2 predicted = project_camera_frame(Ric_t * (body - ext.p_IC), model, &dpi);
  const Mat23 dpiM = dpi * Ric_t * R.transpose();

  LinearMeasurement m;
  m.residual = z - predicted;
  m.H = MatX::Zero(2, filter.dim());
  m.H.block<2, 3>(0, 3) = -dpiM;
  m.H.block<2, 3>(0, filter.landmark_offset(j)) = dpiM;
  switch (filter.variant().kind) {
    case FilterKind::IEKF:
    case FilterKind::IJ_IEKF:
      break;  // the landmark rotates with the state: θ drops out
    case FilterKind::EKF:
    case FilterKind::FEJ:
      m.H.block<2, 3>(0, 0) = dpiM * skew(f - s.p);
      break;
    case FilterKind::QEKF:
      m.H.block<2, 3>(0, 0) = dpi * Ric_t * skew(body);
      break;
  }
  m.N = MatX::Identity(2, 2) * (model.sigma_px * model.sigma_px);
  return m;
}

}  // namespace iekf
