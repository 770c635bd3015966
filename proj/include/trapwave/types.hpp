#pragma once

#include <Eigen/Dense>

namespace trapwave {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Rigid frame: world = origin + rotation * local.
template <typename Scalar>
struct BasicFrame {
    Vector3<Scalar> origin = Vector3<Scalar>::Zero();
    Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();

    Vector3<Scalar> to_local(const Vector3<Scalar>& x) const { return rotation.transpose() * (x - origin); }
    Vector3<Scalar> to_world(const Vector3<Scalar>& y) const { return origin + rotation * y; }
    Vector3<Scalar> axis() const { return rotation.col(0); }

    template <typename Other>
    BasicFrame<Other> cast() const {
        return {origin.template cast<Other>(), rotation.template cast<Other>()};
    }
};
using Frame = BasicFrame<double>;

/// Orthonormal frame whose first column is `e1` (need not be normalised).
template <typename Scalar>
Matrix3<Scalar> frame_from_axis(const Vector3<Scalar>& e1)
{
    Vector3<Scalar> a = e1.normalized();
    Vector3<Scalar> helper = std::abs(a.x()) < Scalar(0.9) ? Vector3<Scalar>::UnitX() : Vector3<Scalar>::UnitY();
    if (std::abs(a.x()) >= Scalar(0.9) && std::abs(a.y()) >= Scalar(0.9)) helper = Vector3<Scalar>::UnitZ();
    Vector3<Scalar> b = (helper - helper.dot(a) * a).normalized();
    Matrix3<Scalar> r;
    r.col(0) = a;
    r.col(1) = b;
    r.col(2) = a.cross(b);
    return r;
}

/// Angle between two nonzero vectors, accurate near 0 and pi.
template <typename DerivedA, typename DerivedB>
auto angle_between(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
{
    using std::atan2;
    return atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace trapwave
