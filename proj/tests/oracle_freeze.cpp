// Prints the reference values that unit and acceptance tests pin as literals.
// Run by hand; the printed numbers are frozen into the test sources so that a
// regression in the library cannot silently drag the expectations along.

#include <cstdio>

#include "oracles.hpp"

int main() {
    using namespace oracle;

    std::printf("entropy(0.25,0.75)            = %.15f\n", entropy_nats({0.25, 0.75}));
    std::printf("h(0.05)                       = %.15f\n", binary_entropy_nats(0.05));
    std::printf("h(0.1)                        = %.15f\n", binary_entropy_nats(0.1));
    std::printf("h(0.11)                       = %.15f\n", binary_entropy_nats(0.11));
    std::printf("h(0.2)                        = %.15f\n", binary_entropy_nats(0.2));
    const double ln2 = std::log(2.0);
    std::printf("ln2 - h(0.05)                 = %.15f\n", ln2 - binary_entropy_nats(0.05));
    std::printf("ln2 - h(0.1)                  = %.15f\n", ln2 - binary_entropy_nats(0.1));
    std::printf("ln2 - h(0.11)                 = %.15f\n", ln2 - binary_entropy_nats(0.11));
    std::printf("ln2 - h(0.2)                  = %.15f\n", ln2 - binary_entropy_nats(0.2));

    // MI of BSC(0.11) under uniform input, straight from the double sum.
    std::printf("mi(uniform, BSC(0.11))        = %.15f\n",
                mi_nats({0.5, 0.5}, {{0.89, 0.11}, {0.11, 0.89}}));

    // Z-channel with W(0|1) = 0.3.
    std::printf("cap(Z-channel 0.3)            = %.15f\n",
                capacity_binary_input({{1.0, 0.0}, {0.3, 0.7}}));

    // Binary erasure channel with erasure probability 0.3, uniform input.
    std::printf("mi(uniform, BEC(0.3))         = %.15f\n",
                mi_nats({0.5, 0.5}, {{0.7, 0.0, 0.3}, {0.0, 0.7, 0.3}}));

    // Joint input-output entropy H(P x W) for uniform + BSC(p).
    std::printf("H(PxW) BSC(0.05) uniform      = %.15f\n", ln2 + binary_entropy_nats(0.05));
    std::printf("H(PxW) BSC(0.2) uniform       = %.15f\n", ln2 + binary_entropy_nats(0.2));

    // Output entropy H(PW) for uniform + BSC is ln 2 regardless of p.
    std::printf("H(PW) BSC uniform             = %.15f\n", entropy_nats({0.5, 0.5}));

    std::printf("multinomial(3,3)              = %s\n",
                multinomial_big({3, 3}).str().c_str());
    std::printf("multinomial(2,2,2)            = %s\n",
                multinomial_big({2, 2, 2}).str().c_str());
    std::printf("multinomial(5,7,8)            = %s\n",
                multinomial_big({5, 7, 8}).str().c_str());
    std::printf("multinomial(12 x 25)          = %s\n",
                multinomial_big(std::vector<int>(25, 12)).str().c_str());

    std::printf("wilson hw (k=0,n=1e6,z=1.96)  = %.15e\n",
                wilson_halfwidth(0, 1000000, 1.96));
    std::printf("wilson hw (k=50,n=1000,z=1.96)= %.15e\n",
                wilson_halfwidth(50, 1000, 1.96));

    std::printf("nfold BSC(0.1) 110->100       = %.17f\n",
                nfold({{0.9, 0.1}, {0.1, 0.9}}, {1, 1, 0}, {1, 0, 0}));
    return 0;
}
