import pytest

from mbmac.radio import (AntennaConfig, ChannelModel, Position, azimuth, beam_for_direction,
                         beam_reception_outcome, in_sector, propagation_delay, transmission_delay)


def test_airtimes_at_five_megabit():
    assert transmission_delay(20, 5e6) == 32_000
    assert transmission_delay(14, 5e6) == 22_400
    assert transmission_delay(1500, 5e6) == 2_400_000


def test_propagation_delay_rounds_to_nanoseconds():
    assert propagation_delay(2000) == 6667
    assert propagation_delay(2500) == 8333
    assert propagation_delay(0) == 0
    with pytest.raises(ValueError):
        propagation_delay(-1)
    assert ChannelModel(comm_radius=3000).max_propagation == 10_000


@pytest.mark.parametrize("dst,expected", [((1, 0), 0.0), ((0, 1), 90.0), ((-1, 0), 180.0),
                                          ((0, -1), 270.0), ((1, 1), 45.0)])
def test_azimuth(dst, expected):
    assert azimuth(Position(0, 0), Position(*dst)) == pytest.approx(expected)


def test_azimuth_of_coincident_points_is_an_error():
    with pytest.raises(ValueError):
        azimuth(Position(1, 1), Position(1, 1))


def test_eight_sector_beam_lookup():
    ant = AntennaConfig(num_beams=8)
    assert beam_for_direction(ant, 0.0) == 0
    assert beam_for_direction(ant, 44.9) == 0
    assert beam_for_direction(ant, 45.0) == 1
    assert beam_for_direction(ant, 359.9) == 7
    rotated = AntennaConfig(num_beams=4, boresight_offset=45.0)
    assert beam_for_direction(rotated, 10.0) == 3


def test_antenna_validation():
    with pytest.raises(ValueError):
        AntennaConfig(num_beams=0)
    with pytest.raises(ValueError):
        AntennaConfig(num_beams=4, steerable=True)
    with pytest.raises(ValueError):
        AntennaConfig(num_beams=4, active_beams=(0, 4))
    ant = AntennaConfig(num_beams=8, active_beams=(3, 1))
    assert ant.usable_beams == (1, 3) and ant.capacity == 2 and ant.is_multibeam


def test_sector_membership_wraps():
    assert in_sector(350.0, 340.0, 45.0)
    assert in_sector(10.0, 340.0, 45.0)
    assert not in_sector(30.0, 340.0, 45.0)


def test_overlapping_arrivals_on_one_beam_collide():
    assert beam_reception_outcome([(0, 10), (10, 20)]) == [True, True]
    assert beam_reception_outcome([(0, 10), (9, 20), (30, 40)]) == [False, False, True]
