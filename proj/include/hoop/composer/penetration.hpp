#pragma once

#include <string>

#include "hoop/core/mesh.hpp"

namespace hoop::composer {

struct PenetrationWeights {
    double data = 1.0;
    double lap = 0.1;
    double edge = 0.1;
};

/// w_data * |V - V*| + w_lap * |L V - L V*| + w_edge * sum_e |len_e(V) / len_e(V*) - 1|,
/// with Frobenius norms and the uniform Laplacian L of the mesh connectivity.
class PenetrationLoss {
public:
    PenetrationLoss(const PartMesh& mesh, Points3 v_star, PenetrationWeights w = {})
        : w_(w), star_(std::move(v_star)), lap_(uniform_laplacian(mesh)) {
        require(star_.rows() == mesh.num_vertices(), "reference vertices do not match the mesh");
        require(star_.allFinite(), "reference vertices are not finite");
        lap_star_ = lap_ * Eigen::MatrixXd(star_);
        for (const auto& e : unique_edges(mesh.faces)) {
            const double len = (star_.row(e[0]) - star_.row(e[1])).norm();
            if (len > 0) {
                edges_.push_back(e);
                rest_.push_back(len);
            } else {
                warnings_.push_back("zero-length rest edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]) +
                                    " excluded from the edge term");
            }
        }
    }

    /// Loss at V; fills `grad` (same shape as V) when non-null.
    double operator()(const Points3& v, Points3* grad = nullptr) const {
        require(v.rows() == star_.rows(), "vertex count does not match the reference");
        if (grad) grad->setZero(v.rows(), 3);
        const Eigen::MatrixXd dv = v - star_;
        const double data = dv.norm();
        const Eigen::MatrixXd dl = lap_ * Eigen::MatrixXd(v) - lap_star_;
        const double lap = dl.norm();
        double edge = 0;
        for (size_t e = 0; e < edges_.size(); ++e) {
            const Vec3 d = (v.row(edges_[e][0]) - v.row(edges_[e][1])).transpose();
            const double len = d.norm();
            const double r = len / rest_[e] - 1.0;
            edge += std::abs(r);
            if (grad && len > 0 && r != 0) {
                const Vec3 g = w_.edge * (r > 0 ? 1.0 : -1.0) / rest_[e] * d / len;
                grad->row(edges_[e][0]) += g.transpose();
                grad->row(edges_[e][1]) -= g.transpose();
            }
        }
        if (grad) {
            if (data > 0) *grad += Points3(w_.data / data * dv);
            if (lap > 0) *grad += Points3(w_.lap / lap * (lap_.transpose() * dl));
        }
        return w_.data * data + w_.lap * lap + w_.edge * edge;
    }

    const std::vector<std::string>& warnings() const { return warnings_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }

private:
    PenetrationWeights w_;
    Points3 star_;
    SparseMatrix lap_;
    Eigen::MatrixXd lap_star_;
    std::vector<Edge> edges_;
    std::vector<double> rest_;
    std::vector<std::string> warnings_;
};

}  // namespace hoop::composer
