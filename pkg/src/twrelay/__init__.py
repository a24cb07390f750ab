"""Performance analysis of amplify-and-forward MIMO beamforming two-way
relay networks: Monte-Carlo link simulation, closed-form sum-BER lower
bounds, high-SNR asymptotics, relay-weight optimization, and inter-protocol
gap tables."""

from .errors import ConfigurationError, NumericalError, UnsupportedConfigError
from .scenario import (AntennaConfig, CoefficientSet, DFactors, Modulation,
                       PowerProfile, Protocol, Scenario, WeightPair,
                       coefficient_set, load_scenario, modulation_constants,
                       parse_protocol, power_profile, protocol_modulation)
from .simulate import (BerEstimate, ChannelDraw, ChannelStream, InstantaneousSnrs,
                       brute_force_beta, draw_channels, end_to_end_snrs,
                       estimate_d_factors, link_snrs, matched_beamformer,
                       sample_end_to_end_snrs, semi_analytic_sum_ber)
from .analysis import (bessel_moment, e2e_cdf, link_cdf, link_pdf,
                       sum_ber_closed_form, sum_ber_quadrature)
from .highsnr import (GapRow, GapTable, HighSnrProfile, OriginDerivatives,
                      beta_closed_form, beta_numeric, eta_pair, gap_table,
                      high_snr_gap, high_snr_profile, high_snr_sum_ber,
                      origin_derivatives)

__version__ = "0.1.0"
