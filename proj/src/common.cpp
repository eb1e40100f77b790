#include "tsreject/common.hpp"

#include <cmath>
#include <iostream>

namespace tsreject {

void warn(const std::string& message) {
    std::cerr << "[tsreject] warning: " << message << "\n";
}

Vector flatten(const Matrix& window) {
    Vector flat(window.rows() * window.cols());
    Index k = 0;
    for (Index t = 0; t < window.rows(); ++t) {
        for (Index v = 0; v < window.cols(); ++v) {
            flat(k++) = window(t, v);
        }
    }
    return flat;
}

Matrix unflatten(const Vector& flat, Index rows, Index cols) {
    if (flat.size() != rows * cols) {
        throw std::invalid_argument("unflatten: size " + std::to_string(flat.size()) +
                                    " does not match " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
    Matrix m(rows, cols);
    Index k = 0;
    for (Index t = 0; t < rows; ++t) {
        for (Index v = 0; v < cols; ++v) {
            m(t, v) = flat(k++);
        }
    }
    return m;
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

}  // namespace tsreject
