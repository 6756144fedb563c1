import java.util.ArrayList;
import java.util.List;

public class Inventory {
    static class Item {
        final String name;
        final double price;

        Item(String name, double price) {
            this.name = name;
            this.price = price;
        }
    }

    private final List<Item> items = new ArrayList<>();

    public void add(String name, double price) {
        items.add(new Inventory.Item(name, price));
    }

    public double total() {
        return items.stream().mapToDouble(i -> i.price).sum();
    }
}
