#include <algorithm>
#include <array>
#include <cmath>

#include "hexspec/spectral.hpp"

namespace hexspec {
namespace {

// CIE 1931 2-degree standard observer, 5 nm steps: wavelength, xbar, ybar, zbar.
constexpr std::array<std::array<double, 4>, 95> kCie1931 = {{
    {{360, 1.299000e-04, 3.917000e-06, 6.061000e-04}},
    {{365, 2.321000e-04, 6.965000e-06, 1.086000e-03}},
    {{370, 4.149000e-04, 1.239000e-05, 1.946000e-03}},
    {{375, 7.416000e-04, 2.202000e-05, 3.486000e-03}},
    {{380, 1.368000e-03, 3.900000e-05, 6.450001e-03}},
    {{385, 2.236000e-03, 6.400000e-05, 1.054999e-02}},
    {{390, 4.243000e-03, 1.200000e-04, 2.005001e-02}},
    {{395, 7.650000e-03, 2.170000e-04, 3.621000e-02}},
    {{400, 1.431000e-02, 3.960000e-04, 6.785001e-02}},
    {{405, 2.319000e-02, 6.400000e-04, 1.102000e-01}},
    {{410, 4.351000e-02, 1.210000e-03, 2.074000e-01}},
    {{415, 7.763000e-02, 2.180000e-03, 3.713000e-01}},
    {{420, 1.343800e-01, 4.000000e-03, 6.456000e-01}},
    {{425, 2.147700e-01, 7.300000e-03, 1.039050e+00}},
    {{430, 2.839000e-01, 1.160000e-02, 1.385600e+00}},
    {{435, 3.285000e-01, 1.684000e-02, 1.622960e+00}},
    {{440, 3.482800e-01, 2.300000e-02, 1.747060e+00}},
    {{445, 3.480600e-01, 2.980000e-02, 1.782600e+00}},
    {{450, 3.362000e-01, 3.800000e-02, 1.772110e+00}},
    {{455, 3.187000e-01, 4.800000e-02, 1.744100e+00}},
    {{460, 2.908000e-01, 6.000000e-02, 1.669200e+00}},
    {{465, 2.511000e-01, 7.390000e-02, 1.528100e+00}},
    {{470, 1.953600e-01, 9.098000e-02, 1.287640e+00}},
    {{475, 1.421000e-01, 1.126000e-01, 1.041900e+00}},
    {{480, 9.564000e-02, 1.390200e-01, 8.129501e-01}},
    {{485, 5.795001e-02, 1.693000e-01, 6.162000e-01}},
    {{490, 3.201000e-02, 2.080200e-01, 4.651800e-01}},
    {{495, 1.470000e-02, 2.586000e-01, 3.533000e-01}},
    {{500, 4.900000e-03, 3.230000e-01, 2.720000e-01}},
    {{505, 2.400000e-03, 4.073000e-01, 2.123000e-01}},
    {{510, 9.300000e-03, 5.030000e-01, 1.582000e-01}},
    {{515, 2.910000e-02, 6.082000e-01, 1.117000e-01}},
    {{520, 6.327000e-02, 7.100000e-01, 7.824999e-02}},
    {{525, 1.096000e-01, 7.932000e-01, 5.725001e-02}},
    {{530, 1.655000e-01, 8.620000e-01, 4.216000e-02}},
    {{535, 2.257499e-01, 9.148501e-01, 2.984000e-02}},
    {{540, 2.904000e-01, 9.540000e-01, 2.030000e-02}},
    {{545, 3.597000e-01, 9.803000e-01, 1.340000e-02}},
    {{550, 4.334499e-01, 9.949501e-01, 8.749999e-03}},
    {{555, 5.120501e-01, 1.000000e+00, 5.749999e-03}},
    {{560, 5.945000e-01, 9.950000e-01, 3.900000e-03}},
    {{565, 6.784000e-01, 9.786000e-01, 2.749999e-03}},
    {{570, 7.621000e-01, 9.520000e-01, 2.100000e-03}},
    {{575, 8.425000e-01, 9.154000e-01, 1.800000e-03}},
    {{580, 9.163000e-01, 8.700000e-01, 1.650001e-03}},
    {{585, 9.786000e-01, 8.163000e-01, 1.400000e-03}},
    {{590, 1.026300e+00, 7.570000e-01, 1.100000e-03}},
    {{595, 1.056700e+00, 6.949000e-01, 1.000000e-03}},
    {{600, 1.062200e+00, 6.310000e-01, 8.000000e-04}},
    {{605, 1.045600e+00, 5.668000e-01, 6.000000e-04}},
    {{610, 1.002600e+00, 5.030000e-01, 3.400000e-04}},
    {{615, 9.384000e-01, 4.412000e-01, 2.400000e-04}},
    {{620, 8.544499e-01, 3.810000e-01, 1.900000e-04}},
    {{625, 7.514000e-01, 3.210000e-01, 1.000000e-04}},
    {{630, 6.424000e-01, 2.650000e-01, 4.999999e-05}},
    {{635, 5.419000e-01, 2.170000e-01, 3.000000e-05}},
    {{640, 4.479000e-01, 1.750000e-01, 2.000000e-05}},
    {{645, 3.608000e-01, 1.382000e-01, 1.000000e-05}},
    {{650, 2.835000e-01, 1.070000e-01, 0.000000e+00}},
    {{655, 2.187000e-01, 8.160000e-02, 0.000000e+00}},
    {{660, 1.649000e-01, 6.100000e-02, 0.000000e+00}},
    {{665, 1.212000e-01, 4.458000e-02, 0.000000e+00}},
    {{670, 8.740000e-02, 3.200000e-02, 0.000000e+00}},
    {{675, 6.360000e-02, 2.320000e-02, 0.000000e+00}},
    {{680, 4.677000e-02, 1.700000e-02, 0.000000e+00}},
    {{685, 3.290000e-02, 1.192000e-02, 0.000000e+00}},
    {{690, 2.270000e-02, 8.210000e-03, 0.000000e+00}},
    {{695, 1.584000e-02, 5.723000e-03, 0.000000e+00}},
    {{700, 1.135916e-02, 4.102000e-03, 0.000000e+00}},
    {{705, 8.110916e-03, 2.929000e-03, 0.000000e+00}},
    {{710, 5.790346e-03, 2.091000e-03, 0.000000e+00}},
    {{715, 4.109457e-03, 1.484000e-03, 0.000000e+00}},
    {{720, 2.899327e-03, 1.047000e-03, 0.000000e+00}},
    {{725, 2.049190e-03, 7.400000e-04, 0.000000e+00}},
    {{730, 1.439971e-03, 5.200000e-04, 0.000000e+00}},
    {{735, 9.999493e-04, 3.611000e-04, 0.000000e+00}},
    {{740, 6.900786e-04, 2.492000e-04, 0.000000e+00}},
    {{745, 4.760213e-04, 1.719000e-04, 0.000000e+00}},
    {{750, 3.323011e-04, 1.200000e-04, 0.000000e+00}},
    {{755, 2.348261e-04, 8.480000e-05, 0.000000e+00}},
    {{760, 1.661505e-04, 6.000000e-05, 0.000000e+00}},
    {{765, 1.174130e-04, 4.240000e-05, 0.000000e+00}},
    {{770, 8.307527e-05, 3.000000e-05, 0.000000e+00}},
    {{775, 5.870652e-05, 2.120000e-05, 0.000000e+00}},
    {{780, 4.150994e-05, 1.499000e-05, 0.000000e+00}},
    {{785, 2.935326e-05, 1.060000e-05, 0.000000e+00}},
    {{790, 2.067383e-05, 7.465700e-06, 0.000000e+00}},
    {{795, 1.455977e-05, 5.257800e-06, 0.000000e+00}},
    {{800, 1.025398e-05, 3.702900e-06, 0.000000e+00}},
    {{805, 7.221456e-06, 2.607800e-06, 0.000000e+00}},
    {{810, 5.085868e-06, 1.836600e-06, 0.000000e+00}},
    {{815, 3.581652e-06, 1.293400e-06, 0.000000e+00}},
    {{820, 2.522525e-06, 9.109300e-07, 0.000000e+00}},
    {{825, 1.776509e-06, 6.415300e-07, 0.000000e+00}},
    {{830, 1.251141e-06, 4.518100e-07, 0.000000e+00}},
}};

}  // namespace

std::array<double, 3> cie1931_cmf(double wavelength_nm) {
  constexpr double first = 360.0;
  constexpr double step = 5.0;
  const double pos = (wavelength_nm - first) / step;
  if (pos < 0.0 || pos > static_cast<double>(kCie1931.size() - 1)) return {0.0, 0.0, 0.0};
  const auto i0 = static_cast<std::size_t>(std::floor(pos));
  const std::size_t i1 = std::min(i0 + 1, kCie1931.size() - 1);
  const double t = pos - static_cast<double>(i0);
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k)
    out[k] = (1.0 - t) * kCie1931[i0][k + 1] + t * kCie1931[i1][k + 1];
  return out;
}

}  // namespace hexspec
