"""Procedure engines, one module per access path."""
from .base import CoreContext, UeConfig
from .n5cw import (BindingTable, DeviceConfig, N5cwPhase, forward_device_packet,
                   run_pdu_establishment_n5cw, run_registration_n5cw)
from .trusted import (TrustedPhase, TrustedUeConfig, run_pdu_establishment_trusted,
                      run_registration_trusted)
from .untrusted import (Phase, RegistrationState, one_sa_per_profile, run_pdu_establishment,
                        run_registration, single_sa)
from .wireline import (RgConfig, RgPhase, run_pdu_establishment_wireline, run_registration_5grg,
                       run_registration_fnrg)
