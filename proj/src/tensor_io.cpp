#include "ttcast/tensor_io.hpp"

#include <fstream>
#include <sstream>

#include "ttcast/binary_io.hpp"

namespace ttcast {

namespace {

template <typename Scalar>
void write_header(BinaryWriter& w, std::string_view magic, const BasicTensor<Scalar>& t) {
    w.raw(magic);
    w.u8(kTensorFormatVersion);
    w.u32(static_cast<std::uint32_t>(t.order()));
    for (auto n : t.shape()) {
        w.u64(n);
    }
}

Shape read_header(BinaryReader& r, std::string_view magic) {
    r.expect_magic(magic, "tensor");
    const auto version = r.u8();
    if (version != kTensorFormatVersion) {
        throw DataError("unsupported tensor format version " + std::to_string(version));
    }
    const auto order = r.u32();
    if (order == 0 || order > 64) {
        throw DataError("implausible tensor order " + std::to_string(order));
    }
    Shape shape(order);
    for (auto& n : shape) {
        n = r.u64();
    }
    return shape;
}

}  // namespace

void write_tensor(std::ostream& os, const DenseTensor& t) {
    BinaryWriter w(os);
    write_header(w, "TTCT", t);
    for (double x : t.data()) {
        w.f64(x);
    }
}

DenseTensor read_tensor(std::istream& is) {
    BinaryReader r(is);
    Shape shape = read_header(r, "TTCT");
    std::vector<double> data(shape_product(shape));
    for (auto& x : data) {
        x = r.f64();
    }
    return {std::move(shape), std::move(data)};
}

void write_complex_tensor(std::ostream& os, const ComplexTensor& t) {
    BinaryWriter w(os);
    write_header(w, "TTCZ", t);
    for (const auto& z : t.data()) {
        w.f64(z.real());
        w.f64(z.imag());
    }
}

ComplexTensor read_complex_tensor(std::istream& is) {
    BinaryReader r(is);
    Shape shape = read_header(r, "TTCZ");
    std::vector<Complex> data(shape_product(shape));
    for (auto& z : data) {
        const double re = r.f64();
        z = {re, r.f64()};
    }
    return {std::move(shape), std::move(data)};
}

void save_tensor(const std::filesystem::path& path, const DenseTensor& t) {
    std::ostringstream os;
    write_tensor(os, t);
    write_file_atomic(path, os.str());
}

DenseTensor load_tensor(const std::filesystem::path& path) {
    std::istringstream is(read_file(path));
    return read_tensor(is);
}

}  // namespace ttcast
