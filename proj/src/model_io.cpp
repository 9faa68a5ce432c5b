#include "ttcast/model_io.hpp"

#include "ttcast/binary_io.hpp"
#include "ttcast/tensor_io.hpp"

namespace ttcast {

namespace {

constexpr std::uint8_t kModelVersion = 1;

void write_cvector(BinaryWriter& w, const CVector& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        w.f64(v(j).real());
        w.f64(v(j).imag());
    }
}

CVector read_cvector(BinaryReader& r, std::size_t count) {
    CVector v(static_cast<Eigen::Index>(count));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double re = r.f64();
        v(j) = Complex(re, r.f64());
    }
    return v;
}

void write_vector(BinaryWriter& w, const Vector& v) {
    w.u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        w.f64(v(j));
    }
}

Vector read_vector(BinaryReader& r) {
    const auto count = r.u64();
    if (count > (std::uint64_t{1} << 28)) {
        throw DataError("implausible vector length in model file");
    }
    Vector v(static_cast<Eigen::Index>(count));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        v(j) = r.f64();
    }
    return v;
}

void check_version(BinaryReader& r, const char* what) {
    const auto version = r.u8();
    if (version != kModelVersion) {
        throw DataError(std::string("unsupported ") + what + " version " + std::to_string(version));
    }
}

std::size_t read_count(BinaryReader& r) {
    const auto p = r.u64();
    if (p > (std::uint64_t{1} << 24)) {
        throw DataError("implausible mode count in model file");
    }
    return static_cast<std::size_t>(p);
}

}  // namespace

void write_ttdmd(std::ostream& os, const TtDmdModel& model) {
    BinaryWriter w(os);
    w.raw("TTDM");
    w.u8(kModelVersion);
    w.f64(model.dt);
    w.u64(model.rank);
    w.u64(model.requested_rank);
    w.u64(model.mode_count());
    write_cvector(w, model.eigenvalues);
    write_cvector(w, model.omega);
    write_vector(w, model.singular_values);
    write_complex_tensor(os, model.mode_tensor);
}

TtDmdModel read_ttdmd(std::istream& is) {
    BinaryReader r(is);
    r.expect_magic("TTDM", "TT-DMD model");
    check_version(r, "TT-DMD model");
    TtDmdModel model;
    model.dt = r.f64();
    model.rank = r.u64();
    model.requested_rank = r.u64();
    const std::size_t p = read_count(r);
    model.eigenvalues = read_cvector(r, p);
    model.omega = read_cvector(r, p);
    model.singular_values = read_vector(r);
    model.mode_tensor = read_complex_tensor(is);
    const std::size_t stored = model.mode_tensor.shape().back();
    if (model.mode_tensor.order() < 2 || (p > 0 ? stored != p : stored != 1)) {
        throw DataError("TT-DMD mode tensor does not match its eigenvalue count");
    }
    return model;
}

void write_dmd(std::ostream& os, const DmdModel& model) {
    BinaryWriter w(os);
    w.raw("TTDD");
    w.u8(kModelVersion);
    w.f64(model.dt);
    w.u64(model.rank);
    w.u64(model.requested_rank);
    w.u64(static_cast<std::uint64_t>(model.eigenvalues.size()));
    write_cvector(w, model.eigenvalues);
    write_vector(w, model.singular_values);
    const Shape shape{static_cast<std::size_t>(model.modes.rows()), static_cast<std::size_t>(model.modes.cols())};
    write_complex_tensor(os, ComplexTensor::from_matrix(model.modes, shape));
}

DmdModel read_dmd(std::istream& is) {
    BinaryReader r(is);
    r.expect_magic("TTDD", "DMD model");
    check_version(r, "DMD model");
    DmdModel model;
    model.dt = r.f64();
    model.rank = r.u64();
    model.requested_rank = r.u64();
    const std::size_t p = read_count(r);
    model.eigenvalues = read_cvector(r, p);
    model.singular_values = read_vector(r);
    const ComplexTensor modes = read_complex_tensor(is);
    if (modes.order() != 2 || modes.extent(1) != p) {
        throw DataError("DMD modes do not match the eigenvalue count");
    }
    model.modes = modes.as_matrix(modes.extent(0));
    return model;
}

}  // namespace ttcast
