package svc;

import org.junit.Before;
import org.junit.Test;

import static org.junit.Assert.assertEquals;
import static org.junit.Assert.assertNotNull;

public class ServiceTest {

    private Service service;

    public ServiceTest() {
        super();
    }

    @Before
    public void setUp() {
        service = new Service(new FakeClock());
    }

    @Test
    public void testStart() {
        service.start();
        assertNotNull(service.startedAt());
    }

    @Test
    public void testStop() {
        service.start();
        service.stop();
        assertEquals(Service.State.STOPPED, service.state());
    }

    static class FakeClock implements Clock {
        @Override
        public long now() {
            return 42L;
        }
    }

    interface Hook {
        void call();
    }
}
