#include "noisyor/linalg.hpp"

namespace noisyor {

Split parse_split(std::string_view text) {
    if (text == "{1}{2,3}") return Split::A_BC;
    if (text == "{2}{1,3}") return Split::B_AC;
    if (text == "{1,2}{3}") return Split::AB_C;
    throw InvalidInput("unknown mode split '" + std::string(text) + "'");
}

std::string to_string(Split split) {
    switch (split) {
        case Split::A_BC: return "{1}{2,3}";
        case Split::B_AC: return "{2}{1,3}";
        case Split::AB_C: return "{1,2}{3}";
    }
    return "?";
}

template SvdResult<double> truncated_svd<double>(const DenseMatrix&, Eigen::Index);
template DenseMatrix rank_m_pinv<double>(const DenseMatrix&, Eigen::Index);
template PsdRoots<double> psd_roots<double>(const DenseMatrix&, Eigen::Index);
template double projector_distance<double>(const DenseMatrix&, const DenseMatrix&);
template double flatten_norm<double>(const DenseTensor3&, Split);
template double spectral_tau<double>(const DenseMatrix&, const DenseMatrix&, Eigen::Index);
template double asym_spectral_eps<double>(const DenseMatrix&, const DenseMatrix&, const DenseMatrix&);

}  // namespace noisyor
