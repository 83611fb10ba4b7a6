#include "fedaux/params.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "fedaux/errors.hpp"

namespace fedaux::nn {

void ParamVector::assign(std::span<const double> src) {
    if (src.size() != values_.size())
        throw InternalError("param assign: length " + std::to_string(src.size()) + " != " +
                            std::to_string(values_.size()));
    std::copy(src.begin(), src.end(), values_.begin());
}

void sgd_step(ParamVector& params, std::span<const double> grads, double eta) {
    if (grads.size() != params.size())
        throw InternalError("sgd_step: gradient length " + std::to_string(grads.size()) + " != " +
                            std::to_string(params.size()));
    if (!(eta >= 0.0)) throw ConfigError("learning rate must be non-negative");
    auto p = params.values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= eta * grads[i];
}

namespace {

template <class UInt>
void put_le(std::ostream& out, UInt v) {
    unsigned char bytes[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(UInt));
}

template <class UInt>
UInt get_le(std::istream& in) {
    unsigned char bytes[sizeof(UInt)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(UInt));
    if (!in) throw DataError("checkpoint truncated");
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const ParamVector& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    put_le<std::uint64_t>(out, params.size());
    for (double v : params.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    if (!out) throw DataError("write failed for checkpoint " + path.string());
}

ParamVector load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    const auto n = get_le<std::uint64_t>(in);
    std::vector<double> values(n);
    for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint " + path.string());
    return ParamVector(std::move(values));
}

}  // namespace fedaux::nn
